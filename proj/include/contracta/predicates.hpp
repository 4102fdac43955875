/**
 * @brief Predicate zoo: removable indices (standard and omega regimes),
 * forbidden fields, special-set membership flags, bad fields in both
 * auxiliary regimes, and the structural recognizers for the hard
 * three-factor shapes.
 */
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "character.hpp"
#include "edit.hpp"

namespace contracta {

enum class Regime { Standard, OmegaPair };

struct RemovableSet {
    std::vector<IndexRef> deriv_slots;                       ///< single removable indices
    std::vector<std::pair<IndexRef, IndexRef>> internal_pairs; ///< removable {i,j} / {k,l}
    bool empty() const { return deriv_slots.empty() && internal_pairs.empty(); }
    int count() const {
        return static_cast<int>(deriv_slots.size() + internal_pairs.size());
    }
};

/**
 * Removable indices of c.
 *
 * Standard regime:
 *  - nabla^(m)R: a derivative index is removable when it is neither free
 *    nor contracting a phi gradient. With two or more free derivative
 *    indices, {i,j} and {k,l} are each removable as a pair when neither
 *    member is free; with exactly one free derivative index, {i,j} is
 *    removable when neither is free, otherwise {k,l} when exactly one of
 *    i,j is free and neither k nor l is.
 *  - nabla^(b)Omega: a derivative index is removable when b >= 3 and the
 *    index is neither free nor contracting a phi gradient.
 *  - S* nabla^(nu)R: an index of the symmetrized block {r1..rnu, j} is
 *    removable when nu >= 1 and it is neither free nor contracting a phi'
 *    gradient; {k,l} is removable as a pair when nu > 0, neither member is
 *    free, and at least one other index of the factor is free.
 *
 * Omega regime (fields built over an antisymmetric omega pair):
 *  - a curvature derivative index (including the S* symmetrized block) is
 *    removable when it is neither free nor contracting a phi or omega
 *    gradient;
 *  - on nabla^(B)Omega, the candidates (non-free, not contracting a phi or
 *    omega gradient) are capped at the leftmost B-2 of them;
 *  - no internal pairs are removable.
 */
inline RemovableSet removable_indices(const Contraction& c, Regime regime = Regime::Standard) {
    RemovableSet out;
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        const Factor& f = c.factors[fi];
        int i = static_cast<int>(fi);
        auto blocked = [&](int s) {
            IndexRef r{i, s};
            if (c.is_free(r)) return true;
            if (contracts_phi(c, i, s)) return true;
            if (regime == Regime::OmegaPair && contracts_omega_gradient(c, i, s)) return true;
            return false;
        };

        if (regime == Regime::OmegaPair) {
            if (f.is_curvature()) {
                for (int s = 0; s < f.deriv; ++s)
                    if (!blocked(s)) out.deriv_slots.push_back({i, s});
                if (f.tag == FactorTag::CurvSstar && !blocked(f.deriv + 1))
                    out.deriv_slots.push_back({i, f.deriv + 1});
            } else if (f.tag == FactorTag::Omega) {
                int cap = f.deriv - 2;
                for (int s = 0; s < f.deriv && cap > 0; ++s)
                    if (!blocked(s)) {
                        out.deriv_slots.push_back({i, s});
                        --cap;
                    }
            }
            continue;
        }

        if (f.tag == FactorTag::CurvGeneric) {
            for (int s = 0; s < f.deriv; ++s)
                if (!blocked(s)) out.deriv_slots.push_back({i, s});
            int free_deriv = 0;
            for (int s = 0; s < f.deriv; ++s)
                if (c.is_free({i, s})) ++free_deriv;
            IndexRef si{i, f.deriv}, sj{i, f.deriv + 1}, sk{i, f.deriv + 2}, sl{i, f.deriv + 3};
            bool ij_clear = !c.is_free(si) && !c.is_free(sj);
            bool kl_clear = !c.is_free(sk) && !c.is_free(sl);
            if (free_deriv >= 2) {
                if (ij_clear) out.internal_pairs.emplace_back(si, sj);
                if (kl_clear) out.internal_pairs.emplace_back(sk, sl);
            } else if (free_deriv == 1) {
                if (ij_clear) out.internal_pairs.emplace_back(si, sj);
                else if (kl_clear) out.internal_pairs.emplace_back(sk, sl);
            }
        } else if (f.tag == FactorTag::Omega) {
            if (f.deriv >= 3)
                for (int s = 0; s < f.deriv; ++s)
                    if (!blocked(s)) out.deriv_slots.push_back({i, s});
        } else if (f.tag == FactorTag::CurvSstar) {
            if (f.deriv >= 1) {
                for (int s = 0; s < f.deriv; ++s)
                    if (!blocked(s)) out.deriv_slots.push_back({i, s});
                if (!blocked(f.deriv + 1)) out.deriv_slots.push_back({i, f.deriv + 1});
            }
            IndexRef sk{i, f.deriv + 2}, sl{i, f.deriv + 3};
            if (f.deriv > 0 && !c.is_free(sk) && !c.is_free(sl)) {
                bool other_free = false;
                for (int s = 0; s < f.arity(); ++s)
                    if (s != f.deriv + 2 && s != f.deriv + 3 && c.is_free({i, s}))
                        other_free = true;
                if (other_free) out.internal_pairs.emplace_back(sk, sl);
            }
        }
    }
    return out;
}

/**
 * Forbidden fields. Only fields with at least one S* factor can be
 * forbidden. With exactly one S* factor: every nabla^(m)R has all its
 * derivative indices on phi gradients and no free index; every Omega
 * factor has exactly two derivative indices, no phi gradient, and no free
 * index; the S* factor is undifferentiated, carries no phi' gradient, and
 * has exactly one free index, which is special. With several S* factors:
 * every nabla^(m)R has all derivative indices on phi gradients and at most
 * one free index, which must be special; every Omega has two derivative
 * indices and either no phi gradient and at most one free index, or
 * exactly one phi gradient and no free index; every S* is
 * undifferentiated, without phi' gradients, with at most one free index;
 * and at least one S* has a special free index.
 */
inline bool is_forbidden(const Contraction& c) {
    Stats st = c.stats();
    if (st.sigma2 == 0) return false;
    auto special_frees = [&](int fi) {
        int n = 0;
        for (const auto& fr : c.free)
            if (fr.factor == fi && detail::is_special_slot(c.factors[fi], fr.slot)) ++n;
        return n;
    };
    auto phi_count_on = [&](int fi) {
        int n = 0;
        const Factor& f = c.factors[fi];
        for (int s = 0; s < f.arity(); ++s) {
            if (f.tag == FactorTag::CurvSstar && s == f.deriv) continue;
            if (contracts_phi(c, static_cast<int>(fi), s)) ++n;
        }
        return n;
    };

    bool any_sstar_special = false;
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        const Factor& f = c.factors[fi];
        int i = static_cast<int>(fi);
        int mu = free_count_on(c, i);
        if (f.tag == FactorTag::CurvGeneric) {
            for (int s = 0; s < f.deriv; ++s)
                if (!contracts_phi(c, i, s)) return false;
            if (st.sigma2 == 1) {
                if (mu != 0) return false;
            } else {
                if (mu > 1) return false;
                if (mu == 1 && special_frees(i) != 1) return false;
            }
        } else if (f.tag == FactorTag::Omega) {
            if (f.deriv != 2) return false;
            int np = phi_count_on(i);
            if (st.sigma2 == 1) {
                if (np != 0 || mu != 0) return false;
            } else {
                if (np == 0) {
                    if (mu > 1) return false;
                } else if (np == 1) {
                    if (mu != 0) return false;
                } else {
                    return false;
                }
            }
        } else if (f.tag == FactorTag::CurvSstar) {
            if (f.deriv != 0) return false;
            PhiFlavor primed = PhiFlavor::Primed;
            for (int s = 0; s < f.arity(); ++s)
                if (s != f.deriv && contracts_phi(c, i, s, &primed)) return false;
            if (st.sigma2 == 1) {
                if (mu != 1 || special_frees(i) != 1) return false;
            } else {
                if (mu > 1) return false;
            }
            if (special_frees(i) >= 1) any_sstar_special = true;
        }
    }
    return any_sstar_special;
}

struct SpecialFlags {
    bool in_Lstar = false;    ///< distinguished nabla^2 Omega_x with both indices free
    bool in_Lplus = false;    ///< rank mu, last free index is the j of an underived S*
    bool in_LdblPlus = false; ///< rank > mu, some underived S* with j and k both free
};

/// Membership flags for the special sublists, relative to a distinguished
/// Omega label x and the base rank mu.
inline SpecialFlags special_set_flags(const Contraction& c, int omega_label_x, int mu) {
    SpecialFlags fl;
    int rank = static_cast<int>(c.free.size());
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        const Factor& f = c.factors[fi];
        int i = static_cast<int>(fi);
        if (f.tag == FactorTag::Omega && f.label == omega_label_x && f.deriv == 2 &&
            c.is_free({i, 0}) && c.is_free({i, 1}))
            fl.in_Lstar = true;
        if (f.tag == FactorTag::CurvSstar && f.deriv == 0) {
            IndexRef j{i, 1}, k{i, 2};
            if (rank == mu && !c.free.empty() && c.free.back() == j) fl.in_Lplus = true;
            if (rank > mu && c.is_free(j) && c.is_free(k)) fl.in_LdblPlus = true;
        }
    }
    return fl;
}

namespace detail {

/// Shared tail of the bad-field predicates: erase factor fi, then check the
/// remainder for no removable indices + regime-specific degeneracy clauses.
inline bool bad_after_erasure(const Contraction& c, int fi, Regime regime) {
    Contraction e = detach_factor(c, fi);
    if (!removable_indices(e, regime).empty()) return false;
    Stats st = e.stats();
    for (size_t gi = 0; gi < e.factors.size(); ++gi) {
        const Factor& g = e.factors[gi];
        int i = static_cast<int>(gi);
        if (g.tag == FactorTag::CurvSstar && !factor_is_simple(e, i)) return false;
        if (regime == Regime::OmegaPair) continue;
        if (st.sigma2 == 0) {
            if (free_count_on(e, i) > 0) return false;
        } else {
            if (g.tag == FactorTag::Omega && g.deriv == 2) {
                int busy = 0;
                for (int s = 0; s < 2; ++s)
                    if (e.is_free({i, s}) || contracts_phi(e, i, s)) ++busy;
                if (busy > 1) return false;
            }
            if (g.tag == FactorTag::CurvGeneric) {
                int mu = free_count_on(e, i), sp = 0;
                for (const auto& fr : e.free)
                    if (fr.factor == i && is_special_slot(g, fr.slot)) ++sp;
                if (mu > 1 || (mu == 1 && sp != 1)) return false;
            }
        }
    }
    return true;
}

} // namespace detail

/**
 * Bad fields. In the Y regime a field is bad when it contains a
 * once-differentiated Y factor whose index is free and erasing that factor
 * leaves a degenerate remainder: no removable indices, every S* factor
 * simple, and (without S* factors) no free indices at all, or (with S*
 * factors) every nabla^2 Omega with at most one busy index and every
 * nabla^(m)R with at most one free index, which is special. In the omega
 * regime a field is bad when it contains an underived antisymmetric omega
 * pair with a free index and erasing that pair leaves no removable index
 * and only simple S* factors.
 */
inline bool is_bad(const Contraction& c, Regime regime) {
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        const Factor& f = c.factors[fi];
        int i = static_cast<int>(fi);
        if (regime == Regime::Standard) {
            if (f.tag != FactorTag::YFun || f.deriv != 1) continue;
            if (!c.is_free({i, 0})) continue;
        } else {
            if (f.tag != FactorTag::OmegaAnti || f.deriv != 0) continue;
            if (!c.is_free({i, 0}) && !c.is_free({i, 1})) continue;
        }
        if (detail::bad_after_erasure(c, i, regime)) return true;
    }
    return false;
}

enum class Sigma3Special {
    None,
    Foula1,   ///< three Omega factors
    Foula2,   ///< two generic curvature factors cross-paired j-j and l-l, plus an Omega
    Foula3,   ///< two S* factors with an l-l pair, plus an Omega
    Bravado1, ///< free/derivative-coupled nabla Omega over an Omega + Omega core
    Bravado2, ///< same over a curvature + curvature core
    Bravado3  ///< same over a core containing an S* factor
};

inline std::string to_string(Sigma3Special s) {
    switch (s) {
        case Sigma3Special::Foula1: return "foula1";
        case Sigma3Special::Foula2: return "foula2";
        case Sigma3Special::Foula3: return "foula3";
        case Sigma3Special::Bravado1: return "bravado1";
        case Sigma3Special::Bravado2: return "bravado2";
        case Sigma3Special::Bravado3: return "bravado3";
        default: return "none";
    }
}

/**
 * Structural recognizer for the special three-factor shapes that need
 * individual treatment. Returns None when sigma != 3 or no shape matches.
 */
inline Sigma3Special recognize_sigma3_special(const Contraction& c) {
    Stats st = c.stats();
    if (st.sigma != 3) return Sigma3Special::None;

    std::vector<int> omegas, generics, sstars;
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        const Factor& f = c.factors[fi];
        if (f.tag == FactorTag::Omega) omegas.push_back(static_cast<int>(fi));
        else if (f.tag == FactorTag::CurvGeneric) generics.push_back(static_cast<int>(fi));
        else if (f.tag == FactorTag::CurvSstar) sstars.push_back(static_cast<int>(fi));
    }

    // Bravado shapes take precedence: a once-differentiated Omega whose
    // single index is free or lands on a derivative index of another real
    // factor, classified by the kind of the remaining two-factor core.
    for (int oi : omegas) {
        const Factor& o = c.factors[oi];
        if (o.deriv != 1) continue;
        IndexRef slot{oi, 0};
        bool coupled = c.is_free(slot);
        if (!coupled) {
            auto pt = c.partner(slot);
            coupled = pt && c.factors[pt->factor].tag != FactorTag::Phi &&
                      c.factors[pt->factor].is_deriv_slot(pt->slot);
        }
        if (!coupled) continue;
        if (!sstars.empty()) return Sigma3Special::Bravado3;
        if (generics.size() == 2) return Sigma3Special::Bravado2;
        if (omegas.size() == 3) return Sigma3Special::Bravado1;
    }

    if (omegas.size() == 3) return Sigma3Special::Foula1;

    auto paired_at = [&](int fa, int sa, int fb, int sb) {
        auto pt = c.partner(IndexRef{fa, sa});
        return pt && pt->factor == fb && pt->slot == sb;
    };

    if (generics.size() == 2 && omegas.size() == 1) {
        const Factor& a = c.factors[generics[0]];
        const Factor& b = c.factors[generics[1]];
        if (paired_at(generics[0], a.deriv + 1, generics[1], b.deriv + 1) &&
            paired_at(generics[0], a.deriv + 3, generics[1], b.deriv + 3))
            return Sigma3Special::Foula2;
    }
    if (sstars.size() == 2 && omegas.size() == 1) {
        const Factor& a = c.factors[sstars[0]];
        const Factor& b = c.factors[sstars[1]];
        if (paired_at(sstars[0], a.deriv + 3, sstars[1], b.deriv + 3))
            return Sigma3Special::Foula3;
    }
    return Sigma3Special::None;
}

} // namespace contracta
