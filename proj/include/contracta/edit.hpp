/**
 * @brief Structural editing utilities shared by the predicates and the
 * rewrite catalog: erasing factors, renumbering slots after a factor's
 * derivative block shrinks or grows, and retargeting pairs.
 *
 * All helpers return new Contraction values; inputs are never mutated.
 */
#pragma once

#include <algorithm>
#include <vector>

#include "contraction.hpp"

namespace contracta {

/**
 * Remove factor fi. Slots of other factors that were paired into fi become
 * free indices (appended to the free list in slot order). Free indices that
 * lived on fi are dropped; factor positions above fi shift down.
 */
inline Contraction detach_factor(const Contraction& c, int fi) {
    Contraction out;
    out.factors = c.factors;
    out.factors.erase(out.factors.begin() + fi);
    auto shift = [fi](IndexRef r) {
        if (r.factor > fi) r.factor--;
        return r;
    };
    std::vector<IndexRef> promoted;
    for (const auto& pr : c.pairs) {
        if (pr.a.factor == fi && pr.b.factor == fi) continue;
        if (pr.a.factor == fi) promoted.push_back(shift(pr.b));
        else if (pr.b.factor == fi) promoted.push_back(shift(pr.a));
        else out.pairs.emplace_back(shift(pr.a), shift(pr.b));
    }
    for (const auto& fr : c.free)
        if (fr.factor != fi) out.free.push_back(shift(fr));
    std::sort(promoted.begin(), promoted.end());
    out.free.insert(out.free.end(), promoted.begin(), promoted.end());
    out.sort_pairs();
    return out;
}

/**
 * Remove one slot from factor fi (its former partner, if any, becomes a
 * free index appended to the free list; a free occurrence is dropped).
 * Slots of fi above the removed one shift down by one. The caller must
 * separately adjust the factor's deriv count to match the new arity.
 */
inline Contraction erase_slot(const Contraction& c, IndexRef victim) {
    Contraction out;
    out.factors = c.factors;
    auto shift = [victim](IndexRef r) {
        if (r.factor == victim.factor && r.slot > victim.slot) r.slot--;
        return r;
    };
    for (const auto& pr : c.pairs) {
        if (pr.a == victim) out.free.push_back(shift(pr.b));
        else if (pr.b == victim) out.free.push_back(shift(pr.a));
        else out.pairs.emplace_back(shift(pr.a), shift(pr.b));
    }
    std::vector<IndexRef> frees;
    for (const auto& fr : c.free)
        if (fr != victim) frees.push_back(shift(fr));
    frees.insert(frees.end(), out.free.begin(), out.free.end());
    out.free = std::move(frees);
    out.sort_pairs();
    return out;
}

/// Shift every slot reference on factor fi at or above from_slot by delta
/// (used when a derivative block grows or shrinks at a known position).
inline void shift_slots(Contraction& c, int fi, int from_slot, int delta) {
    auto adj = [&](IndexRef& r) {
        if (r.factor == fi && r.slot >= from_slot) r.slot += delta;
    };
    for (auto& pr : c.pairs) {
        adj(pr.a);
        adj(pr.b);
        if (pr.b < pr.a) std::swap(pr.a, pr.b);
    }
    for (auto& fr : c.free) adj(fr);
    c.sort_pairs();
}

/// Reconnect whatever occupies `from` (pair partner or free status) to `to`.
/// `from` must be a live slot and `to` must be currently unused.
inline void move_slot(Contraction& c, IndexRef from, IndexRef to) {
    for (auto& pr : c.pairs) {
        if (pr.a == from) { pr = SlotPair(to, pr.b); c.sort_pairs(); return; }
        if (pr.b == from) { pr = SlotPair(pr.a, to); c.sort_pairs(); return; }
    }
    for (auto& fr : c.free)
        if (fr == from) { fr = to; return; }
}

/// Factor index of the partner of (fi, s), or -1 when the slot is free.
inline int partner_factor(const Contraction& c, int fi, int s) {
    auto pt = c.partner(IndexRef{fi, s});
    return pt ? pt->factor : -1;
}

/// True when slot (fi, s) is paired to a single-derivative phi gradient,
/// optionally of one specific flavor.
inline bool contracts_phi(const Contraction& c, int fi, int s,
                          const PhiFlavor* flavor = nullptr) {
    auto pt = c.partner(IndexRef{fi, s});
    if (!pt) return false;
    const Factor& g = c.factors[pt->factor];
    if (g.tag != FactorTag::Phi || g.deriv > 1) return false;
    return !flavor || g.flavor == *flavor;
}

/// True when slot (fi, s) is paired to an omega gradient: a standalone
/// nabla w factor with one slot, or the a/b block of an antisymmetric pair.
inline bool contracts_omega_gradient(const Contraction& c, int fi, int s) {
    auto pt = c.partner(IndexRef{fi, s});
    if (!pt) return false;
    const Factor& g = c.factors[pt->factor];
    if (g.tag == FactorTag::OmegaFun && g.deriv == 1) return true;
    if (g.tag == FactorTag::OmegaAnti && pt->slot >= g.deriv) return true;
    return false;
}

/// Number of free indices living on factor fi.
inline int free_count_on(const Contraction& c, int fi) {
    int n = 0;
    for (const auto& fr : c.free)
        if (fr.factor == fi) ++n;
    return n;
}

/// Swap the attachments (pair partner or free-list entry) of slots x and y.
inline void swap_attachments(Contraction& c, IndexRef x, IndexRef y) {
    for (auto& pr : c.pairs) {
        if (pr.a == x) pr.a = y;
        else if (pr.a == y) pr.a = x;
        if (pr.b == x) pr.b = y;
        else if (pr.b == y) pr.b = x;
        if (pr.b < pr.a) std::swap(pr.a, pr.b);
    }
    for (auto& fr : c.free) {
        if (fr == x) fr = y;
        else if (fr == y) fr = x;
    }
    c.sort_pairs();
}

/**
 * Reassign attachments along a permutation: each (dst, src) entry gives
 * slot dst the attachment (pair partner or free-list position) that slot
 * src carried before. All src slots must be listed as dst slots too.
 */
inline void permute_attachments(Contraction& c,
                                const std::vector<std::pair<IndexRef, IndexRef>>& dst_src) {
    struct Att {
        bool is_free = false;
        int freepos = -1;
        IndexRef partner;
    };
    std::vector<Att> atts(dst_src.size());
    for (size_t t = 0; t < dst_src.size(); ++t) {
        IndexRef src = dst_src[t].second;
        int fp = c.free_position(src);
        if (fp >= 0) atts[t] = {true, fp, {}};
        else atts[t] = {false, -1, *c.partner(src)};
    }
    // Drop the old attachments of every listed slot.
    auto listed = [&](IndexRef r) {
        for (const auto& [d, s] : dst_src)
            if (r == d) return true;
        return false;
    };
    std::erase_if(c.pairs, [&](const SlotPair& p) { return listed(p.a) || listed(p.b); });
    for (size_t t = 0; t < dst_src.size(); ++t) {
        IndexRef dst = dst_src[t].first;
        if (atts[t].is_free) c.free[atts[t].freepos] = dst;
        else c.pairs.emplace_back(dst, atts[t].partner);
    }
    c.sort_pairs();
}

/// True when no phi gradient of any flavor lands on factor fi
/// (for S* factors the mandatory tilde on the i slot is ignored).
inline bool factor_is_simple(const Contraction& c, int fi) {
    const Factor& f = c.factors[fi];
    for (int s = 0; s < f.arity(); ++s) {
        if (f.tag == FactorTag::CurvSstar && s == f.deriv) continue; // i slot
        if (contracts_phi(c, fi, s)) return false;
    }
    return true;
}

/// Renumber the labels of the phi gradients to the contiguous range 1..u,
/// preserving their relative order (useful after erasures).
inline Contraction compact_phi_labels(Contraction c) {
    std::vector<int> labels;
    for (const auto& f : c.factors)
        if (f.tag == FactorTag::Phi && f.deriv <= 1) labels.push_back(f.label);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    for (auto& f : c.factors)
        if (f.tag == FactorTag::Phi && f.deriv <= 1)
            f.label = static_cast<int>(
                std::lower_bound(labels.begin(), labels.end(), f.label) - labels.begin() + 1);
    return c;
}

/**
 * The eraser: remove a phi-saturated factor together with the phi
 * gradients landing on it, or remove a lone phi gradient together with the
 * derivative slot it occupies. Throws std::invalid_argument when the site
 * would orphan a pairing into a free index.
 */
inline Contraction erase_factor(const Contraction& c, int fi) {
    const Factor& f = c.factors[fi];
    if (f.tag == FactorTag::Phi && f.deriv <= 1) {
        auto pt = c.partner(IndexRef{fi, 0});
        if (!pt || !c.factors[pt->factor].is_deriv_slot(pt->slot))
            throw std::invalid_argument(
                "erase_factor: phi gradient not paired to a derivative slot");
        IndexRef host{pt->factor > fi ? pt->factor - 1 : pt->factor, pt->slot};
        Contraction out = detach_factor(c, fi);
        out = erase_slot(out, host);
        out.factors[host.factor].deriv--;
        return out;
    }
    std::vector<int> phis;
    for (int s = 0; s < f.arity(); ++s) {
        auto pt = c.partner(IndexRef{fi, s});
        if (!pt || c.factors[pt->factor].tag != FactorTag::Phi ||
            c.factors[pt->factor].deriv > 1)
            throw std::invalid_argument(
                "erase_factor: slot " + f.slot_name(s) + " is not phi-saturated");
        phis.push_back(pt->factor > fi ? pt->factor - 1 : pt->factor);
    }
    Contraction out = detach_factor(c, fi);
    std::sort(phis.rbegin(), phis.rend());
    for (int pj : phis) out = detach_factor(out, pj);
    return out;
}

} // namespace contracta
