/**
 * @brief The contraction data model: ordered factors, a perfect matching
 * on the non-free slots, and an ordered free-index list.
 *
 * Structural invariants (checked by validate()):
 *  - every slot appears in exactly one pair or exactly once in the free list;
 *  - no pair joins two slots of the same factor (no internal contractions);
 *  - every CurvSstar i-slot is paired with a tilde-phi slot and vice versa;
 *  - the free list has no duplicates.
 */
#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "factor.hpp"

namespace contracta {

struct IndexRef {
    int factor = 0; ///< position in Contraction::factors
    int slot = 0;   ///< dense slot index within that factor

    friend bool operator==(const IndexRef&, const IndexRef&) = default;
    friend auto operator<=>(const IndexRef& a, const IndexRef& b) {
        return std::tie(a.factor, a.slot) <=> std::tie(b.factor, b.slot);
    }
};

struct SlotPair {
    IndexRef a, b; ///< stored with a < b

    SlotPair() = default;
    SlotPair(IndexRef x, IndexRef y) : a(x), b(y) {
        if (b < a) std::swap(a, b);
    }
    friend bool operator==(const SlotPair&, const SlotPair&) = default;
    friend auto operator<=>(const SlotPair& x, const SlotPair& y) {
        return std::tie(x.a, x.b) <=> std::tie(y.a, y.b);
    }
};

struct Stats {
    int sigma = 0;  ///< real length (curvature + Omega factors; Y/OmegaAnti count 1)
    int sigma1 = 0; ///< CurvGeneric count
    int sigma2 = 0; ///< CurvSstar count
    int p = 0;      ///< Omega count
    int u = 0;      ///< Phi count (all flavors)
    int weight = 0; ///< 2*(sigma1+sigma2) - total slot count
    int mu = 0;     ///< free index count

    friend bool operator==(const Stats&, const Stats&) = default;
};

struct Contraction {
    std::vector<Factor> factors;
    std::vector<SlotPair> pairs; ///< kept sorted
    std::vector<IndexRef> free;  ///< order significant (i1..imu)

    friend bool operator==(const Contraction&, const Contraction&) = default;
    friend auto operator<=>(const Contraction& x, const Contraction& y) {
        auto ka = x.encoded(), kb = y.encoded();
        return ka <=> kb;
    }

    /// Flat comparable encoding (used for ordering/merging canonical terms).
    std::vector<int> encoded() const {
        std::vector<int> v;
        for (const auto& f : factors) {
            v.push_back(static_cast<int>(f.tag));
            v.push_back(f.deriv);
            v.push_back(f.label);
            v.push_back(static_cast<int>(f.flavor));
            v.push_back(static_cast<int>(f.ytag));
        }
        v.push_back(-1);
        for (const auto& pr : pairs) {
            v.push_back(pr.a.factor); v.push_back(pr.a.slot);
            v.push_back(pr.b.factor); v.push_back(pr.b.slot);
        }
        v.push_back(-1);
        for (const auto& fr : free) { v.push_back(fr.factor); v.push_back(fr.slot); }
        return v;
    }

    int total_slots() const {
        int n = 0;
        for (const auto& f : factors) n += f.arity();
        return n;
    }

    /// Partner of a slot: pair partner, or nullopt if the slot is free.
    std::optional<IndexRef> partner(IndexRef r) const {
        for (const auto& pr : pairs) {
            if (pr.a == r) return pr.b;
            if (pr.b == r) return pr.a;
        }
        return std::nullopt;
    }

    bool is_free(IndexRef r) const {
        return std::find(free.begin(), free.end(), r) != free.end();
    }

    /// Position in the free list, or -1.
    int free_position(IndexRef r) const {
        for (size_t i = 0; i < free.size(); ++i)
            if (free[i] == r) return static_cast<int>(i);
        return -1;
    }

    void sort_pairs() { std::sort(pairs.begin(), pairs.end()); }

    /// Structural validation; returns a diagnostic or nullopt if valid.
    std::optional<std::string> validate() const {
        std::set<std::pair<int, int>> seen;
        auto touch = [&](IndexRef r, const char* where) -> std::optional<std::string> {
            if (r.factor < 0 || r.factor >= static_cast<int>(factors.size()))
                return std::string(where) + ": factor index out of range";
            if (r.slot < 0 || r.slot >= factors[r.factor].arity())
                return std::string(where) + ": slot out of range for factor f" +
                       std::to_string(r.factor + 1);
            if (!seen.insert({r.factor, r.slot}).second)
                return "slot f" + std::to_string(r.factor + 1) + "." +
                       factors[r.factor].slot_name(r.slot) + " used twice";
            return std::nullopt;
        };
        for (const auto& pr : pairs) {
            if (pr.a.factor == pr.b.factor)
                return std::string("intra-factor pair on f") + std::to_string(pr.a.factor + 1);
            if (auto e = touch(pr.a, "pair")) return e;
            if (auto e = touch(pr.b, "pair")) return e;
        }
        for (const auto& fr : free)
            if (auto e = touch(fr, "free")) return e;
        if (seen.size() != static_cast<size_t>(total_slots()))
            return "uncovered slots: every slot must be paired or free";
        // Every S* i-slot must carry a tilde-phi gradient.  (A tilde-phi may
        // also land on other slots: that configuration represents a term that
        // has already drifted away from the reference shape, and the
        // subsequent-ness predicates need to see it.)
        for (size_t fi = 0; fi < factors.size(); ++fi) {
            const Factor& f = factors[fi];
            if (f.tag == FactorTag::CurvSstar) {
                IndexRef is{static_cast<int>(fi), f.deriv}; // the i slot
                auto pt = partner(is);
                if (!pt || factors[pt->factor].tag != FactorTag::Phi ||
                    factors[pt->factor].flavor != PhiFlavor::Tilde)
                    return "S* factor f" + std::to_string(fi + 1) +
                           " must pair its i slot with a tilde-phi";
            }
        }
        return std::nullopt;
    }

    Stats stats() const {
        Stats s;
        int aux = 0; // Y factors count like an extra Omega; an OmegaAnti
                     // block counts its two omegas as one real factor.
        int wfun = 0; // standalone omega scalars: the pair w1, w2 counts as one.
        for (const auto& f : factors) {
            switch (f.tag) {
                case FactorTag::CurvGeneric: s.sigma1++; break;
                case FactorTag::CurvSstar: s.sigma2++; break;
                case FactorTag::Omega: s.p++; break;
                case FactorTag::Phi: s.u++; break;
                case FactorTag::YFun:
                case FactorTag::OmegaAnti: aux++; break;
                case FactorTag::OmegaFun: wfun++; break;
                case FactorTag::Upsilon: break;
            }
        }
        s.sigma = s.sigma1 + s.sigma2 + s.p + aux + (wfun + 1) / 2;
        s.weight = 2 * (s.sigma1 + s.sigma2) - total_slots();
        s.mu = static_cast<int>(free.size());
        return s;
    }
};

} // namespace contracta
