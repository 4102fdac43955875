/**
 * @brief Reproducible random generator for acceptable contractions.
 *
 * Builds fields constructively so the acceptability clauses hold by
 * construction: hosts are curvature/Omega factors, every Omega carries at
 * least two derivatives, tilde-phi sits on every S* i-slot, primed phi
 * only on S* {r.., j} slots, plain phi on derivative slots of generic
 * curvature factors or anywhere on an Omega, phi labels form {1..u}, and
 * the leftover slots are split into free indices and cross-factor pairs.
 *
 * The skeleton (hosts plus phi attachments) determines the simple
 * character; random_field_pair re-runs only the closure stage so the two
 * fields share it.
 */
#pragma once

#include <algorithm>
#include <random>
#include <stdexcept>
#include <vector>

#include "acceptable.hpp"
#include "contraction.hpp"

namespace contracta {

struct GenOptions {
    int min_sigma = 2;      ///< host factor count lower bound
    int max_sigma = 4;      ///< host factor count upper bound
    int max_depth = 3;      ///< derivative block depth cap
    int min_free = 0;       ///< free index count lower bound (best effort)
    int max_free = 2;       ///< free index count upper bound
    bool allow_sstar = true;
    int max_phi = 2;        ///< plain phi factor cap
    int max_omega = 1;      ///< Omega factor cap
};

namespace gendetail {

inline int pick(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Hosts plus phi attachments; the closure stage only adds frees/pairs.
struct Skeleton {
    std::vector<Factor> factors;
    std::vector<SlotPair> pairs;        ///< phi saturations
    std::vector<IndexRef> open;         ///< host slots still unassigned
};

inline Skeleton make_skeleton(std::mt19937_64& rng, const GenOptions& opt) {
    Skeleton sk;
    int nh = pick(rng, opt.min_sigma, opt.max_sigma);
    int omegas = 0;
    for (int i = 0; i < nh; ++i) {
        int kind = pick(rng, 0, 5);
        if (kind <= 2 || (!opt.allow_sstar && kind <= 3)) {
            sk.factors.push_back(Factor::curv_generic(pick(rng, 0, opt.max_depth)));
        } else if (kind == 3) {
            sk.factors.push_back(Factor::curv_sstar(pick(rng, 0, std::min(2, opt.max_depth))));
        } else if (omegas < opt.max_omega) {
            sk.factors.push_back(Factor::omega(++omegas, pick(rng, 2, 3)));
        } else {
            sk.factors.push_back(Factor::curv_generic(pick(rng, 0, opt.max_depth)));
        }
    }

    std::vector<std::vector<bool>> used(sk.factors.size());
    for (size_t fi = 0; fi < sk.factors.size(); ++fi)
        used[fi].assign(sk.factors[fi].arity(), false);

    int u = 0;
    auto attach_phi = [&](PhiFlavor flavor, IndexRef host) {
        sk.factors.push_back(Factor::phi(++u, flavor));
        sk.pairs.emplace_back(host, IndexRef{static_cast<int>(sk.factors.size()) - 1, 0});
        used[host.factor][host.slot] = true;
    };

    // Every S* i-slot carries a tilde phi; optionally a primed phi on its
    // symmetrized {r.., j} block.
    for (int fi = 0; fi < nh; ++fi) {
        const Factor f = sk.factors[fi]; // by value: attach_phi reallocates
        if (f.tag != FactorTag::CurvSstar) continue;
        attach_phi(PhiFlavor::Tilde, {fi, f.deriv});
        if (pick(rng, 0, 1)) {
            int s = pick(rng, 0, f.deriv); // r1..rnu or (at position nu+1) j
            attach_phi(PhiFlavor::Primed, {fi, s == f.deriv ? f.deriv + 1 : s});
        }
    }

    // Plain phis on permitted slots: derivative slots of generic curvature
    // factors, or any slot of an Omega.
    std::vector<IndexRef> plain_targets;
    for (int fi = 0; fi < nh; ++fi) {
        const Factor& f = sk.factors[fi];
        for (int s = 0; s < f.arity(); ++s) {
            if (used[fi][s]) continue;
            if ((f.tag == FactorTag::CurvGeneric && f.is_deriv_slot(s)) ||
                f.tag == FactorTag::Omega)
                plain_targets.push_back({fi, s});
        }
    }
    std::shuffle(plain_targets.begin(), plain_targets.end(), rng);
    int nphi = pick(rng, 0, std::min<int>(opt.max_phi, static_cast<int>(plain_targets.size())));
    for (int q = 0; q < nphi; ++q) attach_phi(PhiFlavor::Plain, plain_targets[q]);

    for (int fi = 0; fi < nh; ++fi)
        for (int s = 0; s < sk.factors[fi].arity(); ++s)
            if (!used[fi][s]) sk.open.push_back({fi, s});
    return sk;
}

/// Assign the open slots of a skeleton to frees and cross-factor pairs.
inline Contraction close_skeleton(std::mt19937_64& rng, const Skeleton& sk,
                                  const GenOptions& opt) {
    Contraction c;
    c.factors = sk.factors;
    c.pairs = sk.pairs;

    std::vector<IndexRef> open = sk.open;
    std::shuffle(open.begin(), open.end(), rng);
    int nfree = pick(rng, opt.min_free, opt.max_free);

    while (!open.empty()) {
        IndexRef a = open.back();
        open.pop_back();
        if (static_cast<int>(c.free.size()) < nfree) {
            c.free.push_back(a);
            continue;
        }
        // Partner on a different factor; otherwise the slot goes free.
        auto it = std::find_if(open.begin(), open.end(),
                               [&](IndexRef b) { return b.factor != a.factor; });
        if (it == open.end()) {
            c.free.push_back(a);
        } else {
            c.pairs.emplace_back(a, *it);
            open.erase(it);
        }
    }
    c.sort_pairs();
    return c;
}

/// True if some curvature factor has both members of an antisymmetric
/// slot pair (i,j) or (k,l) free — the double character is undefined there.
inline bool antisym_free(const Contraction& c) {
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        const Factor& f = c.factors[fi];
        if (!f.is_curvature()) continue;
        int m = f.deriv;
        auto fr = [&](int s) { return c.is_free({static_cast<int>(fi), s}); };
        if ((fr(m) && fr(m + 1)) || (fr(m + 2) && fr(m + 3))) return true;
    }
    return false;
}

} // namespace gendetail

/// One random acceptable Form2 field; throws if construction goes wrong
/// (never expected — the builder satisfies the clauses structurally).
inline Contraction random_field(std::mt19937_64& rng, const GenOptions& opt = {}) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        gendetail::Skeleton sk = gendetail::make_skeleton(rng, opt);
        Contraction c = gendetail::close_skeleton(rng, sk, opt);
        if (c.validate()) continue;
        if (!validate_acceptable(c, Form::Form2)) continue;
        if (static_cast<int>(c.free.size()) < opt.min_free) continue;
        if (gendetail::antisym_free(c)) continue;
        return c;
    }
    throw std::logic_error("random_field: exhausted attempts");
}

/// k acceptable fields sharing a skeleton (hence a simple character),
/// with independently randomized free indices and pairings.
inline std::vector<Contraction> random_fields(std::mt19937_64& rng, int k,
                                              const GenOptions& opt = {}) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        gendetail::Skeleton sk = gendetail::make_skeleton(rng, opt);
        std::vector<Contraction> out;
        bool ok = true;
        for (int i = 0; i < k && ok; ++i) {
            Contraction c = gendetail::close_skeleton(rng, sk, opt);
            ok = !c.validate() && validate_acceptable(c, Form::Form2) &&
                 !gendetail::antisym_free(c);
            out.push_back(std::move(c));
        }
        if (ok) return out;
    }
    throw std::logic_error("random_fields: exhausted attempts");
}

/// Two acceptable fields sharing a skeleton.
inline std::pair<Contraction, Contraction> random_field_pair(std::mt19937_64& rng,
                                                             const GenOptions& opt = {}) {
    auto v = random_fields(rng, 2, opt);
    return {std::move(v[0]), std::move(v[1])};
}

} // namespace contracta
