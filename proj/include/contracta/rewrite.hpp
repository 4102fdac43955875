/**
 * @brief Formal operation engine: divergence expansion with exclusion
 * policies, the S* decomposition, the three Bianchi-identity rewrites,
 * free-index migration, and free-slot symmetrization.
 *
 * Every operation maps a contraction (at a site) to a formal linear
 * combination; the exact ones satisfy oracle-checkable identities.
 */
#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "edit.hpp"
#include "lincomb.hpp"

namespace contracta {

struct ExclusionPolicy {
    bool forbid_owner = true;        ///< the factor carrying the free index is never hit
    std::vector<int> forbid_factors; ///< additional excluded factor positions
    int force_factor = -1;           ///< when >= 0: hit exactly this factor
};

/// Prepend a derivative slot to factor fi (its new slot 0) and return the
/// modified contraction; existing slot references shift up by one.
inline Contraction add_derivative_slot(Contraction c, int fi) {
    shift_slots(c, fi, 0, +1);
    c.factors[fi].deriv++;
    return c;
}

/**
 * Expand the divergence over a free index: one term per permitted target
 * factor, where the target gains a leading derivative slot paired against
 * the former free index. Gradient factors (single-derivative phi, upsilon)
 * are never targets, and the owner of the free index is never hit (its
 * contribution is not a partial contraction and is handled numerically).
 * Returns an empty combination when the policy excludes every target.
 */
inline LinComb xdiv_expand(const Contraction& c, IndexRef free_ref,
                           const ExclusionPolicy& policy = {}) {
    if (!c.is_free(free_ref))
        throw std::invalid_argument("xdiv_expand: index is not free");
    LinComb out;
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        int i = static_cast<int>(fi);
        if (i == free_ref.factor) continue;
        if (c.factors[fi].is_gradient()) continue;
        if (policy.force_factor >= 0 && i != policy.force_factor) continue;
        bool excluded = false;
        for (int x : policy.forbid_factors)
            if (x == i) excluded = true;
        if (excluded) continue;
        Contraction t = add_derivative_slot(c, i);
        IndexRef fr = free_ref; // shifted if it lived above the new slot
        if (fr.factor == i) fr.slot++;
        t.free.erase(std::find(t.free.begin(), t.free.end(), fr));
        t.pairs.emplace_back(IndexRef{i, 0}, fr);
        t.sort_pairs();
        out.terms.push_back({Rational(1), std::move(t)});
    }
    return out;
}

namespace detail {

/**
 * Replace factor `site` by the two-factor product A·B joined by one fresh
 * contraction line. amap/bmap give, per new-factor slot, the original site
 * slot whose attachment (pair partner or free position) it inherits; the
 * single -1 entry in each map marks the fresh internal line. The phi
 * factor named by phi_factor is retyped tilde.
 */
inline Contraction replace_by_pair(const Contraction& c, int site, const Factor& A,
                                   const std::vector<int>& amap, const Factor& B,
                                   const std::vector<int>& bmap, int phi_factor) {
    Contraction out;
    out.factors = c.factors;
    out.factors[site] = A;
    out.factors.push_back(B);
    int nb = static_cast<int>(out.factors.size()) - 1;
    out.factors[phi_factor].flavor = PhiFlavor::Tilde;

    auto remap = [&](IndexRef r) -> IndexRef {
        if (r.factor != site) return r;
        for (size_t q = 0; q < amap.size(); ++q)
            if (amap[q] == r.slot) return {site, static_cast<int>(q)};
        for (size_t q = 0; q < bmap.size(); ++q)
            if (bmap[q] == r.slot) return {nb, static_cast<int>(q)};
        throw std::logic_error("replace_by_pair: unmapped site slot");
    };
    for (const auto& pr : c.pairs) out.pairs.emplace_back(remap(pr.a), remap(pr.b));
    for (const auto& fr : c.free) out.free.push_back(remap(fr));
    int ea = -1, eb = -1;
    for (size_t q = 0; q < amap.size(); ++q)
        if (amap[q] < 0) ea = static_cast<int>(q);
    for (size_t q = 0; q < bmap.size(); ++q)
        if (bmap[q] < 0) eb = static_cast<int>(q);
    out.pairs.emplace_back(IndexRef{site, ea}, IndexRef{nb, eb});
    out.sort_pairs();
    return out;
}

/**
 * Commutator corrections for the S* decomposition. The decomposition of a
 * block-symmetrized derivative factor through the second Bianchi identity
 * exchanges derivative orderings, and each exchange contributes an exact
 * Ricci-identity remainder ([nabla_x, nabla_s] on a four-index tensor
 * expands into four curvature-times-curvature contractions). emit_comm
 * appends those remainders for one Bianchi step; S holds the site slots of
 * the spectator derivative directions, x the site slot of the exchanged
 * direction, T the four site slots carrying the tensor indices.
 */
inline void emit_junk(LinComb& out, const Contraction& c, int site, const std::vector<int>& S,
                      int x, const std::array<int, 4>& T, const Rational& coeff,
                      int phi_factor) {
    // [nabla_x, nabla_s] R_{abcd} = -sum_p R^e_{a_p x s} R[a_p -> e]
    auto comm = [&](int xs, int ss, int da, int db, const Rational& k) {
        // da/db: site slots whose attachments become leading derivative
        // indices of the A / B factor (-2 = none).
        for (int p = 0; p < 4; ++p) {
            std::vector<int> amap{-1, T[p], xs, ss};
            Factor A = Factor::curv_generic(0);
            if (da != -2) {
                amap.insert(amap.begin(), da);
                A = Factor::curv_generic(1);
            }
            std::vector<int> bmap{T[0], T[1], T[2], T[3]};
            bmap[p] = -1;
            Factor B = Factor::curv_generic(0);
            if (db != -2) {
                bmap.insert(bmap.begin(), db);
                B = Factor::curv_generic(1);
            }
            out.terms.push_back(
                {k * Rational(-1), replace_by_pair(c, site, A, amap, B, bmap, phi_factor)});
        }
    };
    if (S.size() == 1) {
        // J({s}; x; T) = 1/2 [nabla_x, nabla_s] T
        comm(x, S[0], -2, -2, coeff / 2);
    } else if (S.size() == 2) {
        // J({s1,s2}; x; T) = 1/6 [ 2 nabla_{s1}Comm_T(x,s2)
        //                        + 2 nabla_{s2}Comm_T(x,s1)
        //                        + Comm_{nabla_{s2}T}(x,s1)
        //                        + Comm_{nabla_{s1}T}(x,s2) ]
        for (int w = 0; w < 2; ++w) {
            int sa = S[w], sb = S[1 - w];
            // nabla_{sa}Comm_T(x,sb): derivative on A, then on B.
            comm(x, sb, sa, -2, coeff / 3);
            comm(x, sb, -2, sa, coeff / 3);
            // Comm_{nabla_{sb}T}(x,sa): p over the five indices of nabla T.
            // p = derivative index: A = R^e_{sb x sa}, B = nabla_e T.
            {
                std::vector<int> amap{-1, sb, x, sa};
                std::vector<int> bmap{-1, T[0], T[1], T[2], T[3]};
                out.terms.push_back({coeff / 6 * Rational(-1),
                                     replace_by_pair(c, site, Factor::curv_generic(0), amap,
                                                     Factor::curv_generic(1), bmap, phi_factor)});
            }
            // p over the base indices: B = nabla_{sb} T[p -> e].
            comm(x, sa, -2, sb, coeff / 6);
        }
    } else {
        throw std::invalid_argument("sstar_decompose: derivative depth above 3 not supported");
    }
}

} // namespace detail

/**
 * Decompose a generic curvature factor whose i slot is paired to a phi
 * gradient into its symmetrized form plus corrections:
 *
 *   C  =  C~  +  1/(m+1) * sum_t K_t
 *
 * where C~ retypes the factor to S* (and its phi partner to tilde), and
 * K_t swaps the attachments of the t-th derivative slot and the i slot
 * (the phi, retyped tilde, moves onto a derivative index, making every
 * correction simply subsequent). With m = 0 the correction sum is empty.
 */
inline LinComb sstar_decompose(const Contraction& c, int site) {
    const Factor& f = c.factors[site];
    if (f.tag != FactorTag::CurvGeneric)
        throw std::invalid_argument("sstar_decompose: site is not a generic curvature factor");
    IndexRef islot{site, f.deriv};
    auto pt = c.partner(islot);
    if (!pt || c.factors[pt->factor].tag != FactorTag::Phi || c.factors[pt->factor].deriv > 1)
        throw std::invalid_argument("sstar_decompose: i slot is not paired to a phi gradient");
    int m = f.deriv;

    Contraction tilde = c;
    tilde.factors[site].tag = FactorTag::CurvSstar;
    tilde.factors[pt->factor].flavor = PhiFlavor::Tilde;
    LinComb out = LinComb::single(Rational(1), std::move(tilde));

    for (int t = 0; t < m; ++t) {
        Contraction k = c;
        k.factors[pt->factor].flavor = PhiFlavor::Tilde;
        swap_attachments(k, IndexRef{site, t}, islot);
        out.terms.push_back({Rational(1, m + 1), std::move(k)});
    }
    // For m >= 2, resymmetrizing the derivative block exchanges covariant
    // derivative orderings; each exchange leaves an exact Ricci-identity
    // remainder, emitted here so that C = C~ + corrections holds exactly.
    if (m >= 2) {
        for (int t = 0; t < m; ++t) {
            std::vector<int> S;
            for (int s = 0; s < m; ++s)
                if (s != t) S.push_back(s);
            Rational base(1, m + 1);
            detail::emit_junk(out, c, site, S, t, {m, m + 1, m + 2, m + 3}, base, pt->factor);
            detail::emit_junk(out, c, site, S, m + 1, {m, t, m + 2, m + 3}, -base, pt->factor);
            detail::emit_junk(out, c, site, S, m, {t, m + 1, m + 2, m + 3}, -base, pt->factor);
        }
    }
    return out;
}

enum class Koichi { K1 = 1, K2 = 2, K3 = 3 };

namespace detail {

/// Locate the Bianchi rewrite site: a generic curvature factor with its i
/// slot on a phi gradient and its k slot on an upsilon (or phi) gradient.
inline int koichi_site(const Contraction& c) {
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        const Factor& f = c.factors[fi];
        if (f.tag != FactorTag::CurvGeneric) continue;
        auto pi = c.partner(IndexRef{static_cast<int>(fi), f.deriv});
        auto pk = c.partner(IndexRef{static_cast<int>(fi), f.deriv + 2});
        auto grad = [&](const std::optional<IndexRef>& p) {
            return p && c.factors[p->factor].is_gradient();
        };
        if (grad(pi) && grad(pk)) return static_cast<int>(fi);
    }
    return -1;
}

} // namespace detail

/**
 * The three exact curvature-identity rewrites on a generic factor
 * nabla^(m) R_{ijkl} nabla^i phi nabla^k upsilon; each returns the two
 * terms whose sum equals the input:
 *
 *   koichi1:  c = c[j <-> l] + c[j <-> k]
 *   koichi2:  c = c[r_m <-> j] + c[r_m <-> i]           (m >= 1)
 *   koichi3:  c = c[r_m <-> l] + c[r_m <- k, i <- r_m,
 *                                  j <- l, k <- i, l <- j]  (m >= 1)
 *
 * where X <-> Y swaps the attachments of the named slots and X <- Y moves
 * slot Y's attachment onto slot X.
 */
inline LinComb bianchi_correction(const Contraction& c, Koichi which, int site = -1) {
    if (site < 0) site = detail::koichi_site(c);
    if (site < 0) throw std::invalid_argument("bianchi_correction: no admissible site");
    const Factor& f = c.factors[site];
    if (f.tag != FactorTag::CurvGeneric)
        throw std::invalid_argument("bianchi_correction: site is not a generic curvature factor");
    int m = f.deriv;
    IndexRef rm{site, m - 1}, si{site, m}, sj{site, m + 1}, sk{site, m + 2}, sl{site, m + 3};
    if (which != Koichi::K1 && m < 1)
        throw std::invalid_argument("bianchi_correction: rule needs a derivative index");

    Contraction first = c, second = c;
    switch (which) {
        case Koichi::K1:
            swap_attachments(first, sj, sl);
            swap_attachments(second, sj, sk);
            break;
        case Koichi::K2:
            swap_attachments(first, rm, sj);
            swap_attachments(second, rm, si);
            break;
        case Koichi::K3:
            swap_attachments(first, rm, sl);
            permute_attachments(second,
                                {{rm, sk}, {si, rm}, {sj, sl}, {sk, si}, {sl, sj}});
            break;
    }
    LinComb out = LinComb::single(Rational(1), std::move(first));
    out.terms.push_back({Rational(1), std::move(second)});
    return out;
}

/**
 * Move a free index from a derivative slot of from_factor onto a fresh
 * derivative slot of to_factor; the new free index is appended at the end
 * of the free list. Throws when from_factor has no free derivative index
 * or to_factor cannot take derivatives.
 */
inline Contraction migrate_free_index(const Contraction& c, int from_factor, int to_factor) {
    if (c.factors[to_factor].is_gradient())
        throw std::invalid_argument("migrate_free_index: target cannot take derivatives");
    if (from_factor == to_factor)
        throw std::invalid_argument("migrate_free_index: source equals target");
    IndexRef victim{-1, -1};
    for (const auto& fr : c.free)
        if (fr.factor == from_factor && c.factors[from_factor].is_deriv_slot(fr.slot)) {
            victim = fr;
            break;
        }
    if (victim.factor < 0)
        throw std::invalid_argument("migrate_free_index: no free derivative index on the source");
    Contraction out = erase_slot(c, victim);
    out.factors[from_factor].deriv--;
    out = add_derivative_slot(std::move(out), to_factor);
    out.free.push_back({to_factor, 0});
    return out;
}

/// Average every term over the permutations of its first mu free indices.
inline LinComb symmetrize_free(const LinComb& lc, int mu) {
    if (mu <= 1) return lc.normalized();
    LinComb out;
    Rational inv_fact(1);
    for (int k = 2; k <= mu; ++k) inv_fact /= k;
    for (const auto& t : lc.terms) {
        if (static_cast<int>(t.c.free.size()) < mu)
            throw std::invalid_argument("symmetrize_free: rank below the prefix length");
        std::vector<int> perm(mu);
        for (int i = 0; i < mu; ++i) perm[i] = i;
        do {
            Contraction p = t.c;
            for (int i = 0; i < mu; ++i) p.free[i] = t.c.free[perm[i]];
            out.terms.push_back({t.coeff * inv_fact, std::move(p)});
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return out.normalized();
}

} // namespace contracta
