/**
 * @brief Canonical representative of a contraction.
 *
 * Two contractions that differ only by a permutation of factors, or by a
 * permutation of slot assignments inside a fully symmetric derivative
 * block (r-slots of CurvGeneric, {r..,j}-slots of CurvSstar, d-slots of
 * Omega / YFun / OmegaAnti), canonicalize to the same value.
 *
 * Riemann slot symmetries (i<->j antisymmetry, pair swap, first Bianchi)
 * are deliberately NOT quotiented; they are handled by explicit rewrites
 * and by oracle equivalence.
 */
#pragma once

#include <algorithm>
#include <functional>
#include <numeric>

#include "contraction.hpp"

namespace contracta {

namespace detail {

/// Slots of factor f forming one interchangeable symmetric block.
inline std::vector<int> symmetric_block(const Factor& f) {
    std::vector<int> v;
    int n = f.deriv_block();
    for (int s = 0; s < n; ++s) v.push_back(s);
    if (f.tag == FactorTag::CurvSstar) v.push_back(f.deriv + 1); // the j slot
    return v;
}

/// Rebuild c with factors permuted by perm (perm[new_pos] = old_pos).
inline Contraction permute_factors(const Contraction& c, const std::vector<int>& perm) {
    std::vector<int> inv(perm.size());
    for (size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
    Contraction out;
    out.factors.reserve(c.factors.size());
    for (int old_pos : perm) out.factors.push_back(c.factors[old_pos]);
    auto remap = [&](IndexRef r) { return IndexRef{inv[r.factor], r.slot}; };
    for (const auto& pr : c.pairs) out.pairs.emplace_back(remap(pr.a), remap(pr.b));
    for (const auto& fr : c.free) out.free.push_back(remap(fr));
    out.sort_pairs();
    return out;
}

/// Key used to order partners inside a symmetric block: free slots sort by
/// their position in the free list, paired slots by (partner factor, slot).
inline std::tuple<int, int, int> partner_key(const Contraction& c, IndexRef r) {
    int fp = c.free_position(r);
    if (fp >= 0) return {0, fp, 0};
    auto pt = c.partner(r);
    return {1, pt->factor, pt->slot};
}

/// Within every symmetric block, reassign partners so that block slots
/// appear in increasing partner-key order.
inline Contraction sort_symmetric_blocks(const Contraction& c) {
    Contraction out = c;
    for (size_t fi = 0; fi < out.factors.size(); ++fi) {
        auto block = symmetric_block(out.factors[fi]);
        if (block.size() < 2) continue;
        std::vector<IndexRef> refs;
        for (int s : block) refs.push_back({static_cast<int>(fi), s});
        std::vector<IndexRef> sorted = refs;
        std::stable_sort(sorted.begin(), sorted.end(), [&](IndexRef a, IndexRef b) {
            return partner_key(out, a) < partner_key(out, b);
        });
        // Move each sorted slot's attachment onto the block position in order.
        std::vector<std::pair<IndexRef, bool>> att; // (partner-or-free marker)
        std::vector<int> freepos;
        for (auto r : sorted) {
            int fp = out.free_position(r);
            if (fp >= 0) { att.push_back({r, true}); freepos.push_back(fp); }
            else { att.push_back({*out.partner(r), false}); freepos.push_back(-1); }
        }
        // Drop old attachments of these slots.
        auto in_block = [&](IndexRef r) {
            if (r.factor != static_cast<int>(fi)) return false;
            return std::find(block.begin(), block.end(), r.slot) != block.end();
        };
        out.pairs.erase(std::remove_if(out.pairs.begin(), out.pairs.end(),
                                       [&](const SlotPair& p) {
                                           return in_block(p.a) || in_block(p.b);
                                       }),
                        out.pairs.end());
        for (size_t t = 0; t < block.size(); ++t) {
            IndexRef here{static_cast<int>(fi), block[t]};
            if (freepos[t] >= 0) {
                out.free[freepos[t]] = here;
            } else {
                out.pairs.emplace_back(here, att[t].first);
            }
        }
        out.sort_pairs();
    }
    return out;
}

} // namespace detail

/// Deterministic canonical representative (see file comment).
inline Contraction canonicalize(const Contraction& c) {
    const size_t n = c.factors.size();
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    // Sort factors by key; enumerate permutations within equal-key groups
    // and keep the lexicographically least encoding.
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
        return key_of(c.factors[a]) < key_of(c.factors[b]);
    });
    // Group boundaries of equal keys.
    std::vector<std::pair<size_t, size_t>> groups;
    for (size_t i = 0; i < n;) {
        size_t j = i + 1;
        while (j < n && key_of(c.factors[perm[i]]) == key_of(c.factors[perm[j]])) ++j;
        if (j - i > 1) groups.push_back({i, j});
        i = j;
    }
    Contraction best;
    std::vector<int> best_enc;
    bool have = false;
    std::vector<int> work = perm;
    // Recursive enumeration over group-internal permutations.
    auto consider = [&]() {
        Contraction cand = detail::sort_symmetric_blocks(detail::permute_factors(c, work));
        auto enc = cand.encoded();
        if (!have || enc < best_enc) { best = std::move(cand); best_enc = std::move(enc); have = true; }
    };
    std::function<void(size_t)> rec = [&](size_t gi) {
        if (gi == groups.size()) { consider(); return; }
        auto [lo, hi] = groups[gi];
        std::sort(work.begin() + lo, work.begin() + hi);
        do rec(gi + 1);
        while (std::next_permutation(work.begin() + lo, work.begin() + hi));
    };
    rec(0);
    return best;
}

} // namespace contracta
