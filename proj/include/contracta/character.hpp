/**
 * @brief Four-level character classification and its ordering.
 *
 * The character of a contraction records, with increasing precision, which
 * factors the phi gradients contract (weak), where on the S* factors they
 * land (simple), how the free indices distribute over the factors (double),
 * and which factors carry special free indices (refined double, via marks).
 * Characters are stored pre-canonicalized (entry lists sorted), so equality
 * up to factor permutation is structural equality.
 *
 * compare_refined implements the *-decreasing rearrangement comparison and
 * returns Precedent / Subsequent / Equipolent.
 */
#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "acceptable.hpp"
#include "contraction.hpp"

namespace contracta {

enum class Mark : int { None = 0, Star = 1, DStar = 2 };
enum class Level { Weak, Simple, Double, Refined };
enum class Order { Precedent, Equipolent, Subsequent };

struct WeakChar {
    /// Per Omega factor (keyed by its label h): set of phi labels contracting it.
    std::vector<std::pair<int, std::set<int>>> omega_sets;
    /// Per curvature factor: set of phi labels contracting it (sorted list).
    std::vector<std::set<int>> curv_sets;

    friend bool operator==(const WeakChar&, const WeakChar&) = default;
};

struct SimpleChar {
    /// Per Omega factor: (label h, set of phi labels).
    std::vector<std::pair<int, std::set<int>>> L1;
    /// Per CurvGeneric factor: set of phi labels (sorted list).
    std::vector<std::set<int>> L2;
    /// Per CurvSstar factor: (tilde label alpha_w, primed label set S_w), sorted.
    std::vector<std::pair<int, std::set<int>>> L3;

    friend bool operator==(const SimpleChar&, const SimpleChar&) = default;
};

struct RefinedDoubleChar {
    /// Per Omega factor: (label h, phi set, free count).
    std::vector<std::tuple<int, std::set<int>, int>> H1;
    /// Per CurvGeneric factor: (phi set, free count, mark), sorted.
    std::vector<std::tuple<std::set<int>, int, Mark>> H2;
    /// Per CurvSstar factor: (tilde label, primed set, free count, mark), sorted.
    std::vector<std::tuple<int, std::set<int>, int, Mark>> H3;

    friend bool operator==(const RefinedDoubleChar&, const RefinedDoubleChar&) = default;
};

namespace detail {

/// Labels of single-derivative phi factors contracting factor fi of c,
/// optionally restricted by flavor (nullptr = all flavors).
inline std::set<int> phi_labels_on(const Contraction& c, int fi, const PhiFlavor* flavor) {
    std::set<int> out;
    for (size_t gi = 0; gi < c.factors.size(); ++gi) {
        const Factor& g = c.factors[gi];
        if (g.tag != FactorTag::Phi || g.deriv > 1) continue;
        if (flavor && g.flavor != *flavor) continue;
        auto pt = c.partner(IndexRef{static_cast<int>(gi), 0});
        if (pt && pt->factor == fi) out.insert(g.label);
    }
    return out;
}

/// Free indices of c restricted to the alpha-prefix (alpha < 0 = all).
inline std::vector<IndexRef> free_prefix(const Contraction& c, int alpha) {
    if (alpha < 0 || alpha >= static_cast<int>(c.free.size())) return c.free;
    return {c.free.begin(), c.free.begin() + alpha};
}

/// Is slot s of factor f a special index position (internal index of
/// nabla^(m)R, or k/l of an S* factor)?
inline bool is_special_slot(const Factor& f, int s) {
    if (f.tag == FactorTag::CurvGeneric) return f.is_internal_slot(s);
    if (f.tag == FactorTag::CurvSstar) return s == f.deriv + 2 || s == f.deriv + 3;
    return false;
}

} // namespace detail

/// True when some free index of c sits on a special index position.
inline bool has_special_free(const Contraction& c, int alpha = -1) {
    for (const auto& fr : detail::free_prefix(c, alpha))
        if (detail::is_special_slot(c.factors[fr.factor], fr.slot)) return true;
    return false;
}

inline WeakChar weak_character(const Contraction& c) {
    WeakChar w;
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        const Factor& f = c.factors[fi];
        if (f.tag == FactorTag::Omega)
            w.omega_sets.emplace_back(f.label,
                                      detail::phi_labels_on(c, static_cast<int>(fi), nullptr));
        else if (f.is_curvature())
            w.curv_sets.push_back(detail::phi_labels_on(c, static_cast<int>(fi), nullptr));
    }
    std::sort(w.omega_sets.begin(), w.omega_sets.end());
    std::sort(w.curv_sets.begin(), w.curv_sets.end());
    return w;
}

inline SimpleChar simple_character(const Contraction& c) {
    SimpleChar k;
    const PhiFlavor tilde = PhiFlavor::Tilde;
    const PhiFlavor primed = PhiFlavor::Primed;
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        const Factor& f = c.factors[fi];
        int i = static_cast<int>(fi);
        if (f.tag == FactorTag::Omega)
            k.L1.emplace_back(f.label, detail::phi_labels_on(c, i, nullptr));
        else if (f.tag == FactorTag::CurvGeneric)
            k.L2.push_back(detail::phi_labels_on(c, i, nullptr));
        else if (f.tag == FactorTag::CurvSstar) {
            std::set<int> tl = detail::phi_labels_on(c, i, &tilde);
            int alpha_w = tl.empty() ? 0 : *tl.begin();
            k.L3.emplace_back(alpha_w, detail::phi_labels_on(c, i, &primed));
        }
    }
    std::sort(k.L1.begin(), k.L1.end());
    std::sort(k.L2.begin(), k.L2.end());
    std::sort(k.L3.begin(), k.L3.end());
    return k;
}

/// Weak character determined by a simple character (forget the placement of
/// the tilde/primed gradients on their S* factors).
inline WeakChar weak_of(const SimpleChar& k) {
    WeakChar w;
    w.omega_sets = k.L1;
    for (const auto& s : k.L2) w.curv_sets.push_back(s);
    for (const auto& [alpha_w, primed] : k.L3) {
        std::set<int> s = primed;
        if (alpha_w != 0) s.insert(alpha_w);
        w.curv_sets.push_back(s);
    }
    std::sort(w.omega_sets.begin(), w.omega_sets.end());
    std::sort(w.curv_sets.begin(), w.curv_sets.end());
    return w;
}

/**
 * Refined double character of c. With with_marks=false the marks are
 * suppressed (this is the plain double character). alpha >= 0 counts only
 * the first alpha free indices.
 *
 * Throws std::invalid_argument when some factor has both i,j or both k,l
 * free (the double character is undefined there).
 */
inline RefinedDoubleChar refined_double_character(const Contraction& c, int alpha = -1,
                                                  bool with_marks = true) {
    auto frees = detail::free_prefix(c, alpha);
    // Precondition: no antisymmetric pair of free indices on one factor.
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        const Factor& f = c.factors[fi];
        if (!f.is_curvature()) continue;
        auto is_free = [&](int s) {
            return std::find(frees.begin(), frees.end(),
                             IndexRef{static_cast<int>(fi), s}) != frees.end();
        };
        if ((is_free(f.deriv) && is_free(f.deriv + 1)) ||
            (is_free(f.deriv + 2) && is_free(f.deriv + 3)))
            throw std::invalid_argument(
                "double character undefined: factor has an antisymmetric pair of free indices");
    }

    RefinedDoubleChar r;
    const PhiFlavor tilde = PhiFlavor::Tilde;
    const PhiFlavor primed = PhiFlavor::Primed;
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        const Factor& f = c.factors[fi];
        int i = static_cast<int>(fi);
        int nfree = 0, nspecial = 0;
        for (const auto& fr : frees)
            if (fr.factor == i) {
                ++nfree;
                if (detail::is_special_slot(f, fr.slot)) ++nspecial;
            }
        Mark m = Mark::None;
        if (with_marks) m = nspecial >= 2 ? Mark::DStar : nspecial == 1 ? Mark::Star : Mark::None;
        if (f.tag == FactorTag::Omega)
            r.H1.emplace_back(f.label, detail::phi_labels_on(c, i, nullptr), nfree);
        else if (f.tag == FactorTag::CurvGeneric)
            r.H2.emplace_back(detail::phi_labels_on(c, i, nullptr), nfree, m);
        else if (f.tag == FactorTag::CurvSstar) {
            std::set<int> tl = detail::phi_labels_on(c, i, &tilde);
            int alpha_w = tl.empty() ? 0 : *tl.begin();
            r.H3.emplace_back(alpha_w, detail::phi_labels_on(c, i, &primed), nfree, m);
        }
    }
    std::sort(r.H1.begin(), r.H1.end());
    std::sort(r.H2.begin(), r.H2.end());
    std::sort(r.H3.begin(), r.H3.end());
    return r;
}

/// Simple character determined by a refined double character.
inline SimpleChar simple_of(const RefinedDoubleChar& r) {
    SimpleChar k;
    for (const auto& [h, s, n] : r.H1) k.L1.emplace_back(h, s);
    for (const auto& [s, n, m] : r.H2) k.L2.push_back(s);
    for (const auto& [a, s, n, m] : r.H3) k.L3.emplace_back(a, s);
    std::sort(k.L1.begin(), k.L1.end());
    std::sort(k.L2.begin(), k.L2.end());
    std::sort(k.L3.begin(), k.L3.end());
    return k;
}

/**
 * Compare two refined double characters with equal simple part via their
 * *-decreasing rearrangements: the H3 lists are rearranged with the entries
 * of phi'-contracting S* factors first, then the marked entries, in
 * decreasing free-count order; the H2 lists with {**}-marked entries first,
 * then {*}, then unmarked; the H1 lists in decreasing free-count order. The
 * rearranged lists are compared lexicographically (H3, then H2, then H1),
 * shorter lists padded with a sentinel below every real entry; the first
 * larger element decides, and a full tie is Equipolent.
 */
inline Order compare_refined(const RefinedDoubleChar& k1, const RefinedDoubleChar& k2) {
    if (!(simple_of(k1) == simple_of(k2)))
        throw std::invalid_argument("compare_refined: mismatched simple characters");

    using Key = std::tuple<int, int, int>;
    auto h3_keys = [](const RefinedDoubleChar& k) {
        std::vector<Key> v;
        for (const auto& [a, primed, n, m] : k.H3)
            v.emplace_back(primed.empty() ? 0 : 1, static_cast<int>(m), n);
        std::sort(v.rbegin(), v.rend());
        return v;
    };
    auto h2_keys = [](const RefinedDoubleChar& k) {
        std::vector<Key> v;
        for (const auto& [s, n, m] : k.H2) v.emplace_back(static_cast<int>(m), n, 0);
        std::sort(v.rbegin(), v.rend());
        return v;
    };
    auto h1_keys = [](const RefinedDoubleChar& k) {
        std::vector<Key> v;
        for (const auto& [h, s, n] : k.H1) v.emplace_back(n, 0, 0);
        std::sort(v.rbegin(), v.rend());
        return v;
    };
    const Key sentinel{-1, -1, -1};
    auto lex = [&](std::vector<Key> a, std::vector<Key> b) -> int {
        size_t n = std::max(a.size(), b.size());
        a.resize(n, sentinel);
        b.resize(n, sentinel);
        if (a > b) return 1;
        if (a < b) return -1;
        return 0;
    };
    if (int c3 = lex(h3_keys(k1), h3_keys(k2)); c3 != 0)
        return c3 > 0 ? Order::Precedent : Order::Subsequent;
    if (int c2 = lex(h2_keys(k1), h2_keys(k2)); c2 != 0)
        return c2 > 0 ? Order::Precedent : Order::Subsequent;
    if (int c1 = lex(h1_keys(k1), h1_keys(k2)); c1 != 0)
        return c1 > 0 ? Order::Precedent : Order::Subsequent;
    return Order::Equipolent;
}

/// Defining set of a simple character: the tilde labels of its S* entries.
inline std::set<int> defining_set(const SimpleChar& k) {
    std::set<int> out;
    for (const auto& [a, s] : k.L3)
        if (a != 0) out.insert(a);
    return out;
}

/**
 * True iff c (with the same weak character as kappa) has some tilde
 * gradient from kappa's defining set paired to a derivative index.
 * Throws on a weak-character mismatch.
 */
inline bool is_simply_subsequent(const Contraction& c, const SimpleChar& kappa) {
    if (!(weak_character(c) == weak_of(kappa)))
        throw std::invalid_argument("is_simply_subsequent: weak character mismatch");
    std::set<int> def = defining_set(kappa);
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        const Factor& f = c.factors[fi];
        if (f.tag != FactorTag::Phi || f.flavor != PhiFlavor::Tilde || f.deriv > 1) continue;
        if (!def.count(f.label)) continue;
        auto pt = c.partner(IndexRef{static_cast<int>(fi), 0});
        if (pt && c.factors[pt->factor].is_deriv_slot(pt->slot)) return true;
    }
    return false;
}

struct Partition {
    std::vector<std::vector<int>> classes;    ///< term indices grouped by refined char
    std::vector<RefinedDoubleChar> chars;     ///< one char per class
    std::vector<int> z_max;                   ///< indices of maximal classes
};

/**
 * Group fields by refined double character and pick the maximal classes
 * (those not Subsequent to any other class; equipolent classes are all
 * retained). All fields must share a simple character and rank.
 */
inline Partition partition_maximal(const std::vector<Contraction>& fields) {
    Partition p;
    for (size_t i = 0; i < fields.size(); ++i) {
        RefinedDoubleChar r = refined_double_character(fields[i]);
        auto it = std::find(p.chars.begin(), p.chars.end(), r);
        if (it == p.chars.end()) {
            p.chars.push_back(std::move(r));
            p.classes.push_back({static_cast<int>(i)});
        } else {
            p.classes[it - p.chars.begin()].push_back(static_cast<int>(i));
        }
    }
    for (size_t z = 0; z < p.chars.size(); ++z) {
        bool maximal = true;
        for (size_t w = 0; w < p.chars.size(); ++w)
            if (w != z && compare_refined(p.chars[z], p.chars[w]) == Order::Subsequent) {
                maximal = false;
                break;
            }
        if (maximal) p.z_max.push_back(static_cast<int>(z));
    }
    return p;
}

} // namespace contracta
