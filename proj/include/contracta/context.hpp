/**
 * @brief Per-field inductive context: case classification (I / II / III),
 * critical and second-critical factor selection, the A/B subcase split, and
 * the delicate-shape flags.
 */
#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "predicates.hpp"

namespace contracta {

enum class CaseKind { I, II, III };

/// Smallest label of a single-derivative phi gradient of the given flavor
/// landing on factor fi, or 0 when none does.
inline int min_phi_label_on(const Contraction& c, int fi, PhiFlavor flavor) {
    int best = 0;
    const Factor& f = c.factors[fi];
    for (int s = 0; s < f.arity(); ++s) {
        auto pt = c.partner(IndexRef{fi, s});
        if (!pt) continue;
        const Factor& g = c.factors[pt->factor];
        if (g.tag == FactorTag::Phi && g.deriv <= 1 && g.flavor == flavor)
            if (best == 0 || g.label < best) best = g.label;
    }
    return best;
}

/**
 * Case of a field: I when a special free index sits on an S* factor, II
 * when none does but one sits on a generic curvature factor, III otherwise.
 */
inline CaseKind classify_case(const Contraction& c) {
    bool on_generic = false;
    for (const auto& fr : c.free) {
        const Factor& f = c.factors[fr.factor];
        if (!detail::is_special_slot(f, fr.slot)) continue;
        if (f.tag == FactorTag::CurvSstar) return CaseKind::I;
        on_generic = true;
    }
    return on_generic ? CaseKind::II : CaseKind::III;
}

namespace detail {

/// Among candidate factor positions, keep those with the maximum free count.
inline std::vector<int> max_free_subset(const Contraction& c, std::vector<int> cand, int* M) {
    int best = -1;
    for (int fi : cand) best = std::max(best, free_count_on(c, fi));
    std::vector<int> out;
    for (int fi : cand)
        if (free_count_on(c, fi) == best) out.push_back(fi);
    if (M) *M = best < 0 ? 0 : best;
    return out;
}

/// Case III selection over an arbitrary pool of factor positions.
inline std::vector<int> select_case3(const Contraction& c, std::vector<int> pool, int* M) {
    std::vector<int> cand = max_free_subset(c, std::move(pool), M);
    // An Omega factor wins, smallest label first.
    int best_h = 0, best_fi = -1;
    for (int fi : cand)
        if (c.factors[fi].tag == FactorTag::Omega)
            if (best_fi < 0 || c.factors[fi].label < best_h) {
                best_h = c.factors[fi].label;
                best_fi = fi;
            }
    if (best_fi >= 0) return {best_fi};
    // Otherwise a factor contracting a plain or tilde phi gradient, smallest label.
    best_h = 0;
    best_fi = -1;
    for (int fi : cand)
        for (PhiFlavor fl : {PhiFlavor::Plain, PhiFlavor::Tilde}) {
            int h = min_phi_label_on(c, fi, fl);
            if (h > 0 && (best_fi < 0 || h < best_h)) {
                best_h = h;
                best_fi = fi;
            }
        }
    if (best_fi >= 0) return {best_fi};
    // Otherwise all generic curvature candidates not touching any phi gradient.
    std::vector<int> out;
    for (int fi : cand)
        if (c.factors[fi].tag == FactorTag::CurvGeneric && factor_is_simple(c, fi))
            out.push_back(fi);
    if (out.empty()) out = cand;
    return out;
}

} // namespace detail

struct CriticalInfo {
    CaseKind kind = CaseKind::III;
    std::vector<int> critical;        ///< factor positions
    int M = 0;                        ///< free count of the critical factor(s)
    std::vector<int> second_critical; ///< factor positions
    int M_prime = 0;                  ///< free count of the second critical factor(s)
    bool case_A = false;              ///< M' >= 2
    std::vector<int> crucial;         ///< second critical (case A) or critical (case B)
    bool delicate = false;
    bool l_z_star = false;            ///< l of the critical S* meets a special index
};

/**
 * Select the critical factor(s) of a field.
 *
 * Case I: among the S* factors carrying a special free index, keep those
 * with the maximum free count; the critical factor is the candidate
 * contracting the phi' gradient of least label, falling back to the least
 * tilde label. Case II: among the generic curvature factors with two
 * special free indices (falling back to those with one), keep the maximum
 * free count; the critical factor contracts the plain phi gradient of
 * least label, else the critical set is every candidate touching no phi
 * gradient. Case III: among all real factors with the maximum free count,
 * an Omega factor of least label wins, else the factor contracting the
 * plain/tilde phi of least label, else every simple generic curvature
 * candidate.
 */
inline CriticalInfo select_critical_factors(const Contraction& c) {
    CriticalInfo info;
    info.kind = classify_case(c);

    auto special_frees = [&](int fi) {
        int n = 0;
        for (const auto& fr : c.free)
            if (fr.factor == fi && detail::is_special_slot(c.factors[fr.factor], fr.slot)) ++n;
        return n;
    };

    std::vector<int> real;
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        const Factor& f = c.factors[fi];
        if (f.is_curvature() || f.tag == FactorTag::Omega || f.tag == FactorTag::YFun ||
            f.tag == FactorTag::OmegaAnti)
            real.push_back(static_cast<int>(fi));
    }

    if (info.kind == CaseKind::I) {
        std::vector<int> pool;
        for (int fi : real)
            if (c.factors[fi].tag == FactorTag::CurvSstar && special_frees(fi) >= 1)
                pool.push_back(fi);
        std::vector<int> cand = detail::max_free_subset(c, pool, &info.M);
        int best_fi = -1, best_h = 0;
        for (int fi : cand) {
            int h = min_phi_label_on(c, fi, PhiFlavor::Primed);
            if (h > 0 && (best_fi < 0 || h < best_h)) { best_h = h; best_fi = fi; }
        }
        if (best_fi < 0)
            for (int fi : cand) {
                int h = min_phi_label_on(c, fi, PhiFlavor::Tilde);
                if (h > 0 && (best_fi < 0 || h < best_h)) { best_h = h; best_fi = fi; }
            }
        info.critical = best_fi >= 0 ? std::vector<int>{best_fi} : cand;
    } else if (info.kind == CaseKind::II) {
        std::vector<int> pool;
        for (int fi : real)
            if (c.factors[fi].tag == FactorTag::CurvGeneric && special_frees(fi) >= 2)
                pool.push_back(fi);
        if (pool.empty())
            for (int fi : real)
                if (c.factors[fi].tag == FactorTag::CurvGeneric && special_frees(fi) >= 1)
                    pool.push_back(fi);
        std::vector<int> cand = detail::max_free_subset(c, pool, &info.M);
        int best_fi = -1, best_h = 0;
        for (int fi : cand) {
            int h = min_phi_label_on(c, fi, PhiFlavor::Plain);
            if (h > 0 && (best_fi < 0 || h < best_h)) { best_h = h; best_fi = fi; }
        }
        if (best_fi >= 0) info.critical = {best_fi};
        else {
            for (int fi : cand)
                if (factor_is_simple(c, fi)) info.critical.push_back(fi);
            if (info.critical.empty()) info.critical = cand;
        }
    } else {
        info.critical = detail::select_case3(c, real, &info.M);
    }

    // Second critical factor: with a unique critical factor, rerun the case
    // III selection over the remaining real factors; otherwise the critical
    // set is its own second-critical set.
    if (info.critical.size() == 1) {
        std::vector<int> rest;
        for (int fi : real)
            if (fi != info.critical[0]) rest.push_back(fi);
        if (!rest.empty())
            info.second_critical = detail::select_case3(c, rest, &info.M_prime);
    } else {
        info.second_critical = info.critical;
        info.M_prime = info.M;
    }
    info.case_A = info.M_prime >= 2;
    info.crucial = info.case_A ? info.second_critical : info.critical;

    // Delicate shape: no removable index anywhere, and the critical factor
    // is an S* whose whole symmetrized block is free or contracting phi'
    // gradients. l_z_star additionally records whether the l index of that
    // factor meets a special index of another curvature factor.
    if (info.critical.size() == 1) {
        int fi = info.critical[0];
        const Factor& f = c.factors[fi];
        if (f.tag == FactorTag::CurvSstar && removable_indices(c).empty()) {
            bool all_busy = true;
            PhiFlavor primed = PhiFlavor::Primed;
            for (int s = 0; s <= f.deriv + 1 && all_busy; ++s) {
                if (s == f.deriv) continue; // the i slot carries the tilde
                if (!c.is_free({fi, s}) && !contracts_phi(c, fi, s, &primed))
                    all_busy = false;
            }
            info.delicate = all_busy;
            auto pt = c.partner(IndexRef{fi, f.deriv + 3});
            if (pt && c.factors[pt->factor].is_curvature() &&
                detail::is_special_slot(c.factors[pt->factor], pt->slot))
                info.l_z_star = true;
        }
    }
    return info;
}

} // namespace contracta
