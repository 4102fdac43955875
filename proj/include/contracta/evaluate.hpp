/**
 * @brief Pointwise oracle: evaluates linear combinations of contractions
 * on polynomial metric jets with exact rational arithmetic.
 *
 * Evaluation semantics (pinned):
 *  - every symmetric derivative block evaluates as the average over all
 *    orderings of the iterated covariant derivative;
 *  - an S* factor additionally averages over which member of its
 *    symmetrized block occupies the j position of the curvature tensor;
 *  - free indices are saturated by contracting each with the gradient of
 *    one shared scalar (upsilon);
 *  - all contractions are taken at the origin; the constant metric scale
 *    enters as an exact global power (one factor per curvature block,
 *    one inverse per contraction).
 */
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "jet.hpp"
#include "lincomb.hpp"

namespace contracta {

namespace oracle {

/// Inline multi-index (no heap): up to kCap slots, values in [0, 127].
/// Keeps the std::vector surface the tensor code uses.
struct Multi {
    static constexpr int kCap = 16;
    std::int8_t len = 0;
    std::array<std::int8_t, kCap> v{};

    Multi() = default;
    explicit Multi(size_t k) : len(static_cast<std::int8_t>(k)) {}
    Multi(std::initializer_list<int> xs) {
        for (int x : xs) push_back(x);
    }
    template <class It>
    Multi(It first, It last) {
        for (; first != last; ++first) push_back(static_cast<int>(*first));
    }
    Multi(const std::vector<int>& xs) : Multi(xs.begin(), xs.end()) {} // NOLINT(implicit)

    size_t size() const { return static_cast<size_t>(len); }
    int operator[](size_t i) const { return v[i]; }
    std::int8_t& operator[](size_t i) { return v[i]; }
    void push_back(int x) { v[static_cast<size_t>(len++)] = static_cast<std::int8_t>(x); }
    void reserve(size_t) {}
    const std::int8_t* begin() const { return v.data(); }
    const std::int8_t* end() const { return v.data() + len; }
    template <class It>
    void insert(const std::int8_t*, It first, It last) {
        for (; first != last; ++first) push_back(static_cast<int>(*first));
    }
    friend bool operator<(const Multi& a, const Multi& b) {
        if (a.len != b.len) return a.len < b.len;
        return std::memcmp(a.v.data(), b.v.data(), static_cast<size_t>(a.len)) < 0;
    }
    friend bool operator==(const Multi& a, const Multi& b) {
        return a.len == b.len &&
               std::memcmp(a.v.data(), b.v.data(), static_cast<size_t>(a.len)) == 0;
    }
};

/// Sparse tensor with polynomial entries (all indices covariant).
struct TensorAt {
    int n = 0;
    int rank = 0;
    std::map<Multi, Poly> e;

    void add(const Multi& idx, const Poly& p) {
        if (p.is_zero()) return;
        auto it = e.find(idx);
        if (it == e.end()) e.emplace(idx, p);
        else {
            it->second += p;
            if (it->second.is_zero()) e.erase(it);
        }
    }
    TensorAt& operator+=(const TensorAt& o) {
        for (const auto& [i, p] : o.e) add(i, p);
        return *this;
    }
    TensorAt& operator*=(const Rational& s) {
        if (s == 0) { e.clear(); return *this; }
        for (auto& [i, p] : e) p *= s;
        return *this;
    }
};

/// Merge an unsorted contribution list into an ordered entry map in one
/// sort + linear pass (much cheaper than per-entry map insertion when the
/// tables run to millions of entries).
inline std::map<Multi, Poly> bulk_build(std::vector<std::pair<Multi, Poly>>&& buf) {
    std::sort(buf.begin(), buf.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    std::map<Multi, Poly> out;
    size_t i = 0;
    while (i < buf.size()) {
        Poly acc = std::move(buf[i].second);
        size_t j = i + 1;
        for (; j < buf.size() && buf[j].first == buf[i].first; ++j) acc += buf[j].second;
        if (!acc.is_zero()) out.emplace_hint(out.end(), buf[i].first, std::move(acc));
        i = j;
    }
    return out;
}

/// Bounded-memory contribution collector: stages pairs in a flat vector
/// and folds them into the result map in sorted batches, splicing nodes
/// for fresh keys.
struct Staging {
    TensorAt acc;
    std::vector<std::pair<Multi, Poly>> buf;
    size_t cap;

    Staging(int n, int rank, size_t cap_ = size_t(1) << 22) : acc{n, rank, {}}, cap(cap_) {
        buf.reserve(std::min(cap, size_t(1) << 16));
    }
    void add(const Multi& idx, Poly p) {
        if (p.is_zero()) return;
        buf.emplace_back(idx, std::move(p));
        if (buf.size() >= cap) flush();
    }
    void flush() {
        std::map<Multi, Poly> part = bulk_build(std::move(buf));
        buf.clear();
        if (acc.e.empty()) {
            acc.e = std::move(part);
            return;
        }
        acc.e.merge(part);
        for (auto& [k, v] : part) { // keys already present in acc
            auto it = acc.e.find(k);
            it->second += v;
            if (it->second.is_zero()) acc.e.erase(it);
        }
    }
    TensorAt take() {
        flush();
        return std::move(acc);
    }
};

/// Reorder indices: out index p = in index perm[p].
inline TensorAt transpose(const TensorAt& t, const std::vector<int>& perm) {
    TensorAt out{t.n, t.rank, {}};
    Multi idx(t.rank);
    for (const auto& [i, p] : t.e) {
        for (int q = 0; q < t.rank; ++q) idx[q] = i[perm[q]];
        out.add(idx, p);
    }
    return out;
}

inline TensorAt outer(const TensorAt& a, const TensorAt& b) {
    TensorAt out{a.n, a.rank + b.rank, {}};
    for (const auto& [ia, pa] : a.e)
        for (const auto& [ib, pb] : b.e) {
            Multi idx = ia;
            idx.insert(idx.end(), ib.begin(), ib.end());
            out.add(idx, pa * pb);
        }
    return out;
}

/// Covariant derivative with a new open index prepended (position 0).
inline TensorAt nabla_open(const EvalEnv& env, const TensorAt& t) {
    int n = env.n();
    TensorAt out{n, t.rank + 1, {}};
    for (const auto& [idx, p] : t.e) {
        for (int a = 0; a < n; ++a) {
            Poly d = p.dx(a);
            if (!d.is_zero()) {
                Multi j{a};
                j.insert(j.end(), idx.begin(), idx.end());
                out.add(j, d);
            }
        }
        // -Gamma^e_{a m} corrections: this entry plays the role of the
        // index value e at each position.
        for (int pos = 0; pos < t.rank; ++pos) {
            int eidx = idx[pos];
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    const Poly& G = env.gamma_at(eidx, a, b);
                    if (G.is_zero()) continue;
                    Poly corr = G * p;
                    corr *= Rational(-1);
                    Multi j{a};
                    j.insert(j.end(), idx.begin(), idx.end());
                    j[pos + 1] = b;
                    out.add(j, corr);
                }
        }
    }
    return out;
}

/// Contravariant vector jet (components v^a).
using VecJet = std::vector<Poly>;

/// Contract index 0 of t with the contravariant vector v.
inline TensorAt contract0(const TensorAt& t, const VecJet& v) {
    TensorAt out{t.n, t.rank - 1, {}};
    for (const auto& [idx, p] : t.e) {
        const Poly& comp = v[idx[0]];
        if (comp.is_zero()) continue;
        out.add(Multi(idx.begin() + 1, idx.end()), p * comp);
    }
    return out;
}

/// Frame-direction covariant derivative of a contravariant vector:
/// (nabla_a u)^b = d_a u^b + Gamma^b_{ae} u^e.
inline VecJet nabla_frame(const EvalEnv& env, int a, const VecJet& u) {
    int n = env.n();
    VecJet out(n, Poly::zero(n, env.order()));
    for (int b = 0; b < n; ++b) {
        out[b] = u[b].dx(a);
        for (int e2 = 0; e2 < n; ++e2) {
            const Poly& G = env.gamma_at(b, a, e2);
            if (!G.is_zero() && !u[e2].is_zero()) out[b] += G * u[e2];
        }
    }
    return out;
}

/// Covariant directional derivative of a contravariant vector:
/// (nabla_v u)^b = v^a (d_a u^b + Gamma^b_{ae} u^e).
inline VecJet nabla_vec(const EvalEnv& env, const VecJet& v, const VecJet& u) {
    int n = env.n();
    VecJet out(n, Poly::zero(n, env.order()));
    for (int b = 0; b < n; ++b) {
        for (int a = 0; a < n; ++a) {
            if (v[a].is_zero()) continue;
            Poly t = u[b].dx(a);
            for (int e2 = 0; e2 < n; ++e2) {
                const Poly& G = env.gamma_at(b, a, e2);
                if (!G.is_zero() && !u[e2].is_zero()) t += G * u[e2];
            }
            if (!t.is_zero()) out[b] += v[a] * t;
        }
    }
    return out;
}

/// One slot binding inside a factor evaluation: open, or folded against a
/// contravariant gradient vector.
struct Spec {
    bool open = true;
    VecJet v;
};

enum class BaseKind { Scalar, Riemann };

/// Drop monomials of degree above `budget` from every entry (the caller
/// will apply at most `budget` further derivatives before reading off the
/// value at the origin).
inline TensorAt truncate_entries(TensorAt t, int budget) {
    TensorAt out{t.n, t.rank, {}};
    for (auto& [idx, p] : t.e) {
        Poly q = p.truncated(budget);
        if (!q.is_zero()) out.e.emplace(idx, std::move(q));
    }
    return out;
}

/// Bottom of the derivative chain: the base tensor with its folded base
/// indices contracted away (open base indices keep factor order).
inline TensorAt eval_base(const EvalEnv& env, BaseKind kind, const Poly* scalar,
                          const std::vector<Spec>& base, int budget) {
    int n = env.n();
    if (kind == BaseKind::Scalar) {
        TensorAt t{n, 0, {}};
        t.add({}, scalar->truncated(budget));
        return t;
    }
    int rank = 0;
    for (const auto& s : base)
        if (s.open) ++rank;
    TensorAt out{n, rank, {}};
    Multi idx(rank);
    for (const auto& [full, p] : env.riemann()) {
        Poly val = p.truncated(budget);
        if (val.is_zero()) continue;
        int q = 0;
        bool dead = false;
        for (size_t s = 0; s < base.size(); ++s) {
            if (base[s].open) idx[q++] = full[s];
            else {
                const Poly& comp = base[s].v[full[s]];
                if (comp.is_zero()) { dead = true; break; }
                val = val * comp;
            }
        }
        if (!dead && !val.is_zero()) out.add(idx, val);
    }
    return out;
}

/**
 * Apply the derivative chain derivs[t..] (outermost first) to the base.
 * Result indices: open derivative slots in chain order, then open base
 * indices; entries are exact to polynomial degree `budget` (the number of
 * further derivatives the caller may still apply).
 *
 * A folded slot contracts the covariant derivative against a vector field,
 * so the product rule makes the derivative also hit every inner folded
 * vector; those contributions are subtracted with the vector replaced by
 * its covariant directional derivative. An open slot has the same product
 * rule against the frame direction, with (nabla_a u) in place of
 * (nabla_v u) and the frame index prepended to the correction.
 */
inline TensorAt eval_chain(const EvalEnv& env, const std::vector<Spec>& derivs, size_t t,
                           std::vector<Spec> base, BaseKind kind, const Poly* scalar,
                           int budget) {
    if (t == derivs.size()) return eval_base(env, kind, scalar, base, budget);
    const Spec& s = derivs[t];
    int n = env.n();

    TensorAt inner = eval_chain(env, derivs, t + 1, base, kind, scalar, budget + 1);
    TensorAt out;
    if (s.open) out = nabla_open(env, inner);
    else out = contract0(nabla_open(env, inner), s.v);
    out = truncate_entries(std::move(out), budget);

    auto subtract_with = [&](std::vector<Spec> d2, std::vector<Spec> b2) {
        TensorAt corr = eval_chain(env, d2, t + 1, std::move(b2), kind, scalar, budget);
        corr *= Rational(-1);
        out += corr;
    };
    auto subtract_open_with = [&](int a, std::vector<Spec> d2, std::vector<Spec> b2) {
        TensorAt corr = eval_chain(env, d2, t + 1, std::move(b2), kind, scalar, budget);
        for (const auto& [idx, p] : corr.e) {
            Multi j{a};
            j.insert(j.end(), idx.begin(), idx.end());
            Poly q = p;
            q *= Rational(-1);
            out.add(j, q);
        }
    };

    for (size_t u = t + 1; u < derivs.size(); ++u) {
        if (derivs[u].open) continue;
        if (!s.open) {
            std::vector<Spec> d2 = derivs;
            d2[u].v = nabla_vec(env, s.v, derivs[u].v);
            subtract_with(std::move(d2), base);
        } else {
            for (int a = 0; a < n; ++a) {
                std::vector<Spec> d2 = derivs;
                d2[u].v = nabla_frame(env, a, derivs[u].v);
                subtract_open_with(a, std::move(d2), base);
            }
        }
    }
    for (size_t u = 0; u < base.size(); ++u) {
        if (base[u].open) continue;
        if (!s.open) {
            std::vector<Spec> b2 = base;
            b2[u].v = nabla_vec(env, s.v, base[u].v);
            subtract_with(derivs, std::move(b2));
        } else {
            for (int a = 0; a < n; ++a) {
                std::vector<Spec> b2 = base;
                b2[u].v = nabla_frame(env, a, base[u].v);
                subtract_open_with(a, derivs, std::move(b2));
            }
        }
    }
    return truncate_entries(std::move(out), budget);
}

/// Scalar-jet key of a factor.
inline std::string scalar_key(const Factor& f) {
    switch (f.tag) {
        case FactorTag::Omega: return "Omega:" + std::to_string(f.label);
        case FactorTag::Phi: return "phi:" + std::to_string(f.label);
        case FactorTag::Upsilon: return "ups";
        case FactorTag::YFun:
            return f.ytag == YTag::Y ? "Y" : f.ytag == YTag::Y1 ? "Y1" : "Y2";
        case FactorTag::OmegaFun: return "w" + std::to_string(f.label);
        default: return "";
    }
}

namespace fdetail {

/// Average of the chain over all orderings of block positions
/// [0, blocklen) of derivs; output indices returned in the ORIGINAL
/// derivative-slot order (then base opens).
inline TensorAt sym_chain(const EvalEnv& env, const std::vector<Spec>& derivs, int blocklen,
                          const std::vector<Spec>& base, BaseKind kind, const Poly* scalar,
                          int budget) {
    std::vector<int> perm(blocklen);
    std::iota(perm.begin(), perm.end(), 0);
    TensorAt acc;
    int count = 0;
    do {
        std::vector<Spec> d2 = derivs;
        for (int q = 0; q < blocklen; ++q) d2[q] = derivs[perm[q]];
        TensorAt t = eval_chain(env, d2, 0, base, kind, scalar, budget);
        // Map output indices back to the original slot order.
        // Open chain positions (in permuted order) own the leading indices.
        std::vector<int> open_slot; // original deriv position per output index
        for (int q = 0; q < blocklen; ++q)
            if (d2[q].open) open_slot.push_back(perm[q]);
        for (size_t q = blocklen; q < derivs.size(); ++q)
            if (derivs[q].open) open_slot.push_back(static_cast<int>(q));
        int nopen_deriv = static_cast<int>(open_slot.size());
        std::vector<int> order(t.rank);
        std::iota(order.begin(), order.end(), 0);
        std::vector<int> sorted(nopen_deriv);
        std::iota(sorted.begin(), sorted.end(), 0);
        std::sort(sorted.begin(), sorted.end(),
                  [&](int a, int b) { return open_slot[a] < open_slot[b]; });
        for (int q = 0; q < nopen_deriv; ++q) order[q] = sorted[q];
        TensorAt fixed = transpose(t, order);
        if (count == 0) acc = std::move(fixed);
        else acc += fixed;
        ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    acc *= Rational(1, count);
    return acc;
}

} // namespace fdetail

/**
 * Evaluate one factor with the given per-slot bindings; the result tensor
 * carries the open slots in factor slot order.
 */
inline TensorAt eval_factor(const EvalEnv& env, const Factor& f, const std::vector<Spec>& specs,
                            int budget) {
    switch (f.tag) {
        case FactorTag::Omega:
        case FactorTag::YFun:
        case FactorTag::OmegaFun:
        case FactorTag::Phi:
        case FactorTag::Upsilon: {
            const Poly& s = env.scalar(scalar_key(f));
            return fdetail::sym_chain(env, specs, static_cast<int>(specs.size()), {},
                                      BaseKind::Scalar, &s, budget);
        }
        case FactorTag::CurvGeneric: {
            int m = f.deriv;
            std::vector<Spec> derivs(specs.begin(), specs.begin() + m);
            std::vector<Spec> base(specs.begin() + m, specs.end());
            return fdetail::sym_chain(env, derivs, m, base, BaseKind::Riemann, nullptr, budget);
        }
        case FactorTag::CurvSstar: {
            // Average over all (nu+1)! orderings of the block {r.., j}; in
            // each, the last block member occupies the curvature j slot and
            // the rest form the derivative chain (further averaged).
            int nu = f.deriv;
            // Block members as slot ids: r slots 0..nu-1 and slot nu+1 (j).
            auto slot_of = [&](int b) { return b < nu ? b : nu + 1; };
            std::vector<int> perm(nu + 1);
            std::iota(perm.begin(), perm.end(), 0);
            TensorAt acc;
            int count = 0;
            do {
                std::vector<Spec> derivs;
                std::vector<int> deriv_slots;
                for (int q = 0; q < nu; ++q) {
                    derivs.push_back(specs[slot_of(perm[q])]);
                    deriv_slots.push_back(slot_of(perm[q]));
                }
                int wslot = slot_of(perm[nu]);
                std::vector<Spec> base{specs[nu], specs[wslot], specs[nu + 2], specs[nu + 3]};
                std::vector<int> base_slots{nu, wslot, nu + 2, nu + 3};
                TensorAt t = eval_chain(env, derivs, 0, base, BaseKind::Riemann, nullptr, budget);
                // Output index -> slot id, then sort into slot order.
                std::vector<int> owner;
                for (int q = 0; q < nu; ++q)
                    if (derivs[q].open) owner.push_back(deriv_slots[q]);
                for (int q = 0; q < 4; ++q)
                    if (base[q].open) owner.push_back(base_slots[q]);
                std::vector<int> order(t.rank);
                std::iota(order.begin(), order.end(), 0);
                std::sort(order.begin(), order.end(),
                          [&](int a, int b) { return owner[a] < owner[b]; });
                TensorAt fixed = transpose(t, order);
                if (count == 0) acc = std::move(fixed);
                else acc += fixed;
                ++count;
            } while (std::next_permutation(perm.begin(), perm.end()));
            acc *= Rational(1, count);
            return acc;
        }
        case FactorTag::OmegaAnti: {
            // [sym nabla^(B) (nabla w1)]_{d.. x} (nabla w2)_y - (x <-> y),
            // with (x, y) = (a, b).
            int B = f.deriv;
            const Poly& w1 = env.scalar("w1");
            const Poly& w2 = env.scalar("w2");
            auto half = [&](const Spec& sa, const Spec& sb, bool flip) {
                std::vector<Spec> derivs(specs.begin(), specs.begin() + B);
                derivs.push_back(sa); // innermost: the nabla w1 index
                TensorAt t1 = fdetail::sym_chain(env, derivs, B, {}, BaseKind::Scalar, &w1, budget);
                std::vector<Spec> d2{sb};
                TensorAt t2 = fdetail::sym_chain(env, d2, 1, {}, BaseKind::Scalar, &w2, budget);
                TensorAt prod = outer(t1, t2);
                // Index owners: derivs (slots 0..B-1 kept in order by
                // sym_chain), then sa's slot, then sb's slot.
                std::vector<int> owner;
                for (int q = 0; q < B; ++q)
                    if (specs[q].open) owner.push_back(q);
                if (sa.open) owner.push_back(flip ? B + 1 : B);
                if (sb.open) owner.push_back(flip ? B : B + 1);
                std::vector<int> order(prod.rank);
                std::iota(order.begin(), order.end(), 0);
                std::sort(order.begin(), order.end(),
                          [&](int x, int y) { return owner[x] < owner[y]; });
                return transpose(prod, order);
            };
            TensorAt out = half(specs[B], specs[B + 1], false);
            TensorAt second = half(specs[B + 1], specs[B], true);
            second *= Rational(-1);
            out += second;
            return out;
        }
    }
    throw std::logic_error("eval_factor: unhandled factor kind");
}

/**
 * Per-environment memo shared across the terms of one evaluation: fully
 * open factor tables keyed by factor shape and budget, plus the sparse
 * nonzero structure of the Christoffel symbols.
 */
struct Memo {
    std::map<std::string, TensorAt> tables;
    std::vector<std::vector<std::pair<int, int>>> gamma_nz; ///< upper index -> (a,b)
    std::map<int, std::vector<Poly>> gamma_cut;             ///< degree -> truncated table
    std::map<std::string, VecJet> grads;                    ///< truncated gradient vectors
};

namespace fdetail {

inline const std::vector<std::vector<std::pair<int, int>>>& gamma_nz(const EvalEnv& env,
                                                                     Memo& memo) {
    if (!memo.gamma_nz.empty()) return memo.gamma_nz;
    int n = env.n();
    memo.gamma_nz.assign(n, {});
    for (int e = 0; e < n; ++e)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if (!env.gamma_at(e, a, b).is_zero()) memo.gamma_nz[e].emplace_back(a, b);
    return memo.gamma_nz;
}

/// Christoffel table truncated at degree d (so products stop scanning the
/// high-degree tail of the cached jets).
inline const std::vector<Poly>& gamma_cut(const EvalEnv& env, Memo& memo, int d) {
    auto it = memo.gamma_cut.find(d);
    if (it != memo.gamma_cut.end()) return it->second;
    const auto& G = env.gamma();
    std::vector<Poly> g;
    g.reserve(G.size());
    for (const auto& p : G) g.push_back(p.truncated(d));
    return memo.gamma_cut.emplace(d, std::move(g)).first->second;
}

/// nabla_open over a whole table using the sparse Christoffel structure;
/// output entries exact (and truncated) to degree `out_budget`.
inline TensorAt nabla_open_table(const EvalEnv& env, Memo& memo, const TensorAt& t,
                                 int out_budget) {
    const auto& nz = gamma_nz(env, memo);
    const auto& G = gamma_cut(env, memo, out_budget);
    int n = t.n;
    Staging st(n, t.rank + 1);
    for (const auto& [idx, p] : t.e) {
        for (int a = 0; a < n; ++a) {
            Poly d = p.dx(a).truncated(out_budget);
            if (d.is_zero()) continue;
            Multi j{a};
            j.insert(j.end(), idx.begin(), idx.end());
            st.add(j, std::move(d));
        }
        for (int pos = 0; pos < t.rank; ++pos)
            for (auto [a, b] : nz[idx[pos]]) {
                const Poly& g = G[(static_cast<size_t>(idx[pos]) * n + a) * n + b];
                if (g.is_zero()) continue;
                Poly corr = g * p;
                if (corr.is_zero()) continue;
                corr *= Rational(-1);
                Multi j{a};
                j.insert(j.end(), idx.begin(), idx.end());
                j[pos + 1] = b;
                st.add(j, std::move(corr));
            }
    }
    return st.take();
}

/// Iterated covariant derivative of a table: L open slots prepended in
/// chain order (outermost first); entries exact to degree `budget`.
inline TensorAt iterate_open(const EvalEnv& env, Memo& memo, TensorAt t, int L, int budget) {
    for (int k = 1; k <= L; ++k) t = nabla_open_table(env, memo, t, budget + L - k);
    return t;
}

/// Average of a table over all permutations of the slot positions `block`
/// (the positions permute among themselves; other slots stay put).
inline TensorAt sym_block(const TensorAt& t, std::vector<int> block) {
    if (block.size() < 2) return t;
    std::sort(block.begin(), block.end());
    std::vector<int> perm = block;
    Staging st(t.n, t.rank);
    int count = 0;
    do {
        std::vector<int> order(t.rank);
        std::iota(order.begin(), order.end(), 0);
        for (size_t q = 0; q < block.size(); ++q) order[block[q]] = perm[q];
        Multi idx(t.rank);
        for (const auto& [i, p] : t.e) {
            for (int q = 0; q < t.rank; ++q) idx[q] = i[order[q]];
            st.add(idx, p);
        }
        ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    TensorAt acc = st.take();
    acc *= Rational(1, count);
    return acc;
}

inline TensorAt riemann_table(const EvalEnv& env, int budget) {
    TensorAt t{env.n(), 4, {}};
    for (const auto& [idx, p] : env.riemann()) {
        Poly q = p.truncated(budget);
        if (!q.is_zero()) t.add(idx, q);
    }
    return t;
}

} // namespace fdetail

/**
 * Fully open table of a factor (all slots open), memoized per env. Because
 * covariant-derivative slots are tensor slots, any folded binding is a
 * pointwise contraction of this table with the vector's jet — no product
 * rule is involved, unlike the chain evaluation above (kept as the slow
 * reference path).
 */
/// Unsymmetrized m-fold covariant derivative of the Riemann table,
/// memoized so CurvGeneric and CurvSstar factors of the same depth share
/// the one expensive iterate and differ only by symmetrization transposes.
inline const TensorAt& riemann_iterate(const EvalEnv& env, Memo& memo, int m, int budget) {
    std::string key = "IR:" + std::to_string(m) + "@" + std::to_string(budget);
    auto it = memo.tables.find(key);
    if (it != memo.tables.end()) return it->second;
    TensorAt u =
        fdetail::iterate_open(env, memo, fdetail::riemann_table(env, budget + m), m, budget);
    return memo.tables.emplace(std::move(key), std::move(u)).first->second;
}

inline const TensorAt& open_table(const EvalEnv& env, Memo& memo, const Factor& f, int budget) {
    std::string key;
    switch (f.tag) {
        case FactorTag::Omega:
        case FactorTag::YFun:
        case FactorTag::OmegaFun:
        case FactorTag::Phi:
        case FactorTag::Upsilon:
            key = "S:" + scalar_key(f) + ":" + std::to_string(f.arity());
            break;
        case FactorTag::CurvGeneric: key = "CR:" + std::to_string(f.deriv); break;
        case FactorTag::CurvSstar: key = "SR:" + std::to_string(f.deriv); break;
        case FactorTag::OmegaAnti: key = "OmA:" + std::to_string(f.deriv); break;
    }
    key += "@" + std::to_string(budget);
    auto it = memo.tables.find(key);
    if (it != memo.tables.end()) return it->second;

    int n = env.n();
    TensorAt out;
    switch (f.tag) {
        case FactorTag::Omega:
        case FactorTag::YFun:
        case FactorTag::OmegaFun:
        case FactorTag::Phi:
        case FactorTag::Upsilon: {
            int L = f.arity();
            TensorAt base{n, 0, {}};
            base.add({}, env.scalar(scalar_key(f)).truncated(budget + L));
            out = fdetail::iterate_open(env, memo, std::move(base), L, budget);
            std::vector<int> block(L);
            std::iota(block.begin(), block.end(), 0);
            out = fdetail::sym_block(out, block);
            break;
        }
        case FactorTag::CurvGeneric: {
            int m = f.deriv;
            const TensorAt& u = riemann_iterate(env, memo, m, budget);
            std::vector<int> block(m);
            std::iota(block.begin(), block.end(), 0);
            out = fdetail::sym_block(u, block);
            break;
        }
        case FactorTag::CurvSstar: {
            // Average over all assignments of the block members {r.., j} to
            // the chain positions and the curvature j slot: every
            // assignment is a transposition of the one iterated table.
            int nu = f.deriv;
            const TensorAt& u = riemann_iterate(env, memo, nu, budget);
            std::vector<int> block;
            for (int q = 0; q < nu; ++q) block.push_back(q);
            block.push_back(nu + 1);
            out = fdetail::sym_block(u, block);
            break;
        }
        case FactorTag::OmegaAnti: {
            // [sym nabla^(B) (nabla w1)]_{d.. a} (nabla w2)_b - (a <-> b).
            int B = f.deriv;
            TensorAt s1{n, 0, {}};
            s1.add({}, env.scalar("w1").truncated(budget + B + 1));
            TensorAt u1 = fdetail::iterate_open(env, memo, std::move(s1), B + 1, budget);
            // Chain order: slot 0 is outermost; the gradient index of w1 is
            // the innermost application, i.e. the LAST slot.
            std::vector<int> block(B);
            std::iota(block.begin(), block.end(), 0);
            u1 = fdetail::sym_block(u1, block);
            TensorAt s2{n, 0, {}};
            s2.add({}, env.scalar("w2").truncated(budget + 1));
            TensorAt u2 = fdetail::iterate_open(env, memo, std::move(s2), 1, budget);
            TensorAt prod = outer(u1, u2);
            std::vector<int> swap_ab(prod.rank);
            std::iota(swap_ab.begin(), swap_ab.end(), 0);
            std::swap(swap_ab[B], swap_ab[B + 1]);
            TensorAt second = transpose(prod, swap_ab);
            second *= Rational(-1);
            prod += second;
            out = std::move(prod);
            break;
        }
    }
    return memo.tables.emplace(std::move(key), std::move(out)).first->second;
}

/// Contract slot `pos` of a table against a contravariant vector jet.
inline TensorAt fold_slot(const TensorAt& t, int pos, const VecJet& v) {
    oracle::Staging st(t.n, t.rank - 1);
    for (const auto& [idx, p] : t.e) {
        const Poly& comp = v[idx[pos]];
        if (comp.is_zero()) continue;
        Poly val = p * comp;
        if (val.is_zero()) continue;
        Multi rest;
        rest.reserve(idx.size() - 1);
        for (size_t q = 0; q < idx.size(); ++q)
            if (static_cast<int>(q) != pos) rest.push_back(idx[q]);
        st.add(rest, std::move(val));
    }
    return st.take();
}

/// Contravariant gradient vector of a scalar-jet label: v^a = g^{ab} d_b s.
inline VecJet gradient_vec(const EvalEnv& env, const std::string& key) {
    int n = env.n();
    const Poly& s = env.scalar(key);
    const auto& inv = env.ginv();
    VecJet v(n, Poly::zero(n, env.order()));
    for (int b = 0; b < n; ++b) {
        Poly d = s.dx(b);
        if (d.is_zero()) continue;
        for (int a = 0; a < n; ++a)
            if (!inv[a][b].is_zero()) v[a] += inv[a][b] * d;
    }
    return v;
}

/// Memoized gradient vector with components truncated at `budget` (the
/// table path only ever uses these pointwise, so the high-degree tail of
/// the full jets is dead weight in every fold product).
inline const VecJet& grad_memo(const EvalEnv& env, Memo& memo, const std::string& key,
                               int budget) {
    std::string k = key + "@" + std::to_string(budget);
    auto it = memo.grads.find(k);
    if (it != memo.grads.end()) return it->second;
    VecJet v = gradient_vec(env, key);
    for (auto& p : v) p = p.truncated(budget);
    return memo.grads.emplace(std::move(k), std::move(v)).first->second;
}

inline bool vector_like(const Factor& f) {
    return f.arity() == 1 && f.tag != FactorTag::CurvGeneric &&
           f.tag != FactorTag::CurvSstar && f.tag != FactorTag::OmegaAnti;
}

/// Exact integer power of a rational (negative exponents allowed).
inline Rational rat_pow(const Rational& x, int e) {
    Rational out(1);
    Rational base = x;
    int k = e;
    if (k < 0) {
        base = Rational(1) / x;
        k = -k;
    }
    for (int i = 0; i < k; ++i) out *= base;
    return out;
}

/// A host tensor labeled by contraction-line ids.
struct Labeled {
    std::vector<int> labels;
    TensorAt t;
};

/// Contract a set of labeled tensors over equal labels. In origin mode the
/// metric at the base point is the identity (labels join diagonally and
/// only constant terms survive); in poly mode lines contract with the full
/// inverse-metric jet and entries stay polynomial. Returns the remaining
/// open tensor (rank = number of unmatched labels).
inline Labeled contract_network(const EvalEnv& env, std::vector<Labeled> parts, bool poly_mode,
                                int trunc_degree) {
    int n = env.n();
    auto simplify = [&](Labeled& L) {
        if (!poly_mode) {
            TensorAt c{n, L.t.rank, {}};
            for (const auto& [idx, p] : L.t.e) {
                Rational v = p.at0();
                if (v != 0) c.add(idx, Poly::constant(n, env.order(), v));
            }
            L.t = std::move(c);
        } else {
            for (auto& [idx, p] : L.t.e) p = p.truncated(trunc_degree);
        }
    };
    const auto& inv0 = env.ginv();
    auto self_contract = [&](Labeled& L) {
        // Internal traces: a contraction line may join two slots of the
        // same factor.
        for (size_t i = 0; i < L.labels.size(); ++i) {
            size_t j = i + 1;
            while (j < L.labels.size() && L.labels[j] != L.labels[i]) ++j;
            if (j == L.labels.size()) continue;
            Labeled out;
            for (size_t q = 0; q < L.labels.size(); ++q)
                if (q != i && q != j) out.labels.push_back(L.labels[q]);
            out.t = TensorAt{n, static_cast<int>(out.labels.size()), {}};
            for (const auto& [idx, p] : L.t.e) {
                Poly val = p;
                if (!poly_mode) {
                    if (idx[i] != idx[j]) continue;
                } else {
                    const Poly& gi = inv0[idx[i]][idx[j]];
                    if (gi.is_zero()) continue;
                    val = (val * gi).truncated(trunc_degree);
                }
                if (val.is_zero()) continue;
                Multi rest;
                for (size_t q = 0; q < idx.size(); ++q)
                    if (q != i && q != j) rest.push_back(idx[q]);
                out.t.add(rest, val);
            }
            L = std::move(out);
            i = static_cast<size_t>(-1); // restart scan
        }
    };
    if (parts.empty()) {
        Labeled unit;
        unit.t = TensorAt{n, 0, {}};
        unit.t.add({}, Poly::constant(n, env.order(), Rational(1)));
        return unit;
    }
    const auto& inv = env.ginv();
    auto merge = [&](const Labeled& A, const Labeled& B) {
        // Shared labels.
        std::vector<std::pair<int, int>> shared; // (posA, posB)
        std::vector<int> keepA, keepB;
        for (size_t i = 0; i < A.labels.size(); ++i) {
            bool found = false;
            for (size_t j = 0; j < B.labels.size(); ++j)
                if (A.labels[i] == B.labels[j]) {
                    shared.emplace_back(static_cast<int>(i), static_cast<int>(j));
                    found = true;
                    break;
                }
            if (!found) keepA.push_back(static_cast<int>(i));
        }
        for (size_t j = 0; j < B.labels.size(); ++j) {
            bool used = false;
            for (auto& [pi, pj] : shared)
                if (pj == static_cast<int>(j)) used = true;
            if (!used) keepB.push_back(static_cast<int>(j));
        }
        Labeled out;
        for (int i : keepA) out.labels.push_back(A.labels[i]);
        for (int j : keepB) out.labels.push_back(B.labels[j]);
        out.t = TensorAt{n, static_cast<int>(out.labels.size()), {}};
        for (const auto& [ia, pa] : A.t.e)
            for (const auto& [ib, pb] : B.t.e) {
                Poly weight = Poly::constant(n, env.order(), Rational(1));
                bool dead = false;
                for (auto& [pi, pj] : shared) {
                    if (!poly_mode) {
                        if (ia[pi] != ib[pj]) { dead = true; break; }
                    } else {
                        const Poly& gi = inv[ia[pi]][ib[pj]];
                        if (gi.is_zero()) { dead = true; break; }
                        weight = weight * gi;
                    }
                }
                if (dead) continue;
                Poly val = pa * pb;
                if (poly_mode) val = (val * weight).truncated(trunc_degree);
                if (val.is_zero()) continue;
                Multi idx;
                for (int i : keepA) idx.push_back(ia[i]);
                for (int j : keepB) idx.push_back(ib[j]);
                out.t.add(idx, val);
            }
        return out;
    };
    for (auto& L : parts) {
        simplify(L);
        self_contract(L);
    }
    Labeled acc = std::move(parts[0]);
    std::vector<bool> used(parts.size(), false);
    used[0] = true;
    for (size_t done = 1; done < parts.size(); ++done) {
        // Prefer a part sharing a label with the accumulator.
        size_t pick = 0;
        bool found = false;
        for (size_t i = 0; i < parts.size() && !found; ++i) {
            if (used[i]) continue;
            for (int l : parts[i].labels)
                if (std::find(acc.labels.begin(), acc.labels.end(), l) != acc.labels.end()) {
                    pick = i;
                    found = true;
                    break;
                }
            if (!found && pick == 0) pick = i;
        }
        if (!found)
            for (size_t i = 0; i < parts.size(); ++i)
                if (!used[i]) { pick = i; break; }
        acc = merge(acc, parts[pick]);
        used[pick] = true;
        simplify(acc);
    }
    return acc;
}

/// Assembled evaluation of one contraction term. extra_div_owner >= 0 adds
/// an outermost covariant derivative on that factor, contracted against the
/// term's single free index (the owner-hit divergence term). open_free
/// leaves the free indices open instead of saturating them (poly mode).
inline Labeled eval_term_network(const Contraction& c, const EvalEnv& env, bool poly_mode,
                                 int trunc_degree, Memo& memo, int extra_div_owner = -1,
                                 bool open_free = false) {
    int n = env.n();
    std::vector<int> host_of(c.factors.size(), -1);
    std::vector<int> hosts;
    for (size_t fi = 0; fi < c.factors.size(); ++fi)
        if (!vector_like(c.factors[fi])) {
            host_of[fi] = static_cast<int>(hosts.size());
            hosts.push_back(static_cast<int>(fi));
        }
    // Line labels: pair index + 1 for host-host pairs; free indices get
    // labels -(pos+1) in open mode; the extra-divergence line is 1000000.
    const int kDivLine = 1000000;
    int read_budget = poly_mode ? trunc_degree : 0;
    const VecJet& ups = grad_memo(env, memo, "ups", read_budget);

    std::vector<Labeled> parts;
    // Vector-vector pairs contribute scalar multipliers.
    for (size_t pi = 0; pi < c.pairs.size(); ++pi) {
        const auto& pr = c.pairs[pi];
        if (!vector_like(c.factors[pr.a.factor]) || !vector_like(c.factors[pr.b.factor]))
            continue;
        const auto& inv = env.ginv();
        Poly dot = Poly::zero(n, env.order());
        Poly sa_none = Poly::zero(n, env.order());
        (void)sa_none;
        const Poly& s1 = env.scalar(scalar_key(c.factors[pr.a.factor]));
        const Poly& s2 = env.scalar(scalar_key(c.factors[pr.b.factor]));
        for (int a = 0; a < n; ++a) {
            Poly d1 = s1.dx(a).truncated(read_budget);
            if (d1.is_zero()) continue;
            for (int b = 0; b < n; ++b) {
                Poly d2 = s2.dx(b).truncated(read_budget);
                if (d2.is_zero() || inv[a][b].is_zero()) continue;
                dot += d1 * (inv[a][b].truncated(read_budget) * d2);
            }
        }
        Labeled L;
        L.t = TensorAt{n, 0, {}};
        L.t.add({}, dot);
        parts.push_back(std::move(L));
    }

    for (int fi : hosts) {
        const Factor& f = c.factors[fi];
        std::vector<Spec> specs(f.arity());
        std::vector<int> labels;
        for (int s = 0; s < f.arity(); ++s) {
            IndexRef here{fi, s};
            auto pt = c.partner(here);
            if (pt) {
                if (vector_like(c.factors[pt->factor])) {
                    specs[s].open = false;
                    specs[s].v =
                        grad_memo(env, memo, scalar_key(c.factors[pt->factor]), read_budget);
                } else {
                    specs[s].open = true;
                    // label = pair position + 1
                    for (size_t pi = 0; pi < c.pairs.size(); ++pi)
                        if (c.pairs[pi].a == here || c.pairs[pi].b == here)
                            labels.push_back(static_cast<int>(pi) + 1);
                }
            } else {
                int pos = c.free_position(here);
                if (extra_div_owner >= 0 && pos == 0) {
                    specs[s].open = true;
                    labels.push_back(kDivLine);
                } else if (open_free) {
                    specs[s].open = true;
                    labels.push_back(-(pos + 1));
                } else {
                    specs[s].open = false;
                    specs[s].v = ups;
                }
            }
        }
        bool is_owner = extra_div_owner >= 0 && fi == extra_div_owner;
        TensorAt t = open_table(env, memo, f, read_budget + (is_owner ? 1 : 0));
        int offset = 0;
        if (is_owner) {
            // The extra derivative hits the factor tensor itself; the
            // folded bindings below stay pointwise.
            t = fdetail::nabla_open_table(env, memo, t, read_budget);
            labels.insert(labels.begin(), kDivLine);
            offset = 1;
        }
        for (int s = f.arity() - 1; s >= 0; --s)
            if (!specs[s].open) t = fold_slot(t, s + offset, specs[s].v);
        parts.push_back({std::move(labels), std::move(t)});
    }
    return contract_network(env, std::move(parts), poly_mode, trunc_degree);
}

} // namespace oracle

/// Scale exponent of a saturated term: one power per curvature factor,
/// minus one per contraction line (original pairs plus saturations).
inline int scale_exponent(const Contraction& c) {
    Stats st = c.stats();
    return st.sigma1 + st.sigma2 - static_cast<int>(c.pairs.size() + c.free.size());
}

/// Exact value of one contraction at the origin (free slots saturated with
/// the shared upsilon gradient). The memo is shared across the terms of a
/// linear combination evaluated on one env.
inline Rational evaluate_term(const Contraction& c, const EvalEnv& env, oracle::Memo& memo) {
    oracle::Labeled r = oracle::eval_term_network(c, env, false, env.order(), memo);
    Rational v = r.t.e.empty() ? Rational(0) : r.t.e.begin()->second.at0();
    return v * oracle::rat_pow(env.jet.scale, scale_exponent(c));
}

inline Rational evaluate_term(const Contraction& c, const EvalEnv& env) {
    oracle::Memo memo;
    return evaluate_term(c, env, memo);
}

/// Exact value of a linear combination.
inline Rational evaluate(const LinComb& lc, const EvalEnv& env) {
    oracle::Memo memo;
    Rational v(0);
    for (const auto& t : lc.terms) v += t.coeff * evaluate_term(t.c, env, memo);
    return v;
}

/// Owner-hit divergence term: an extra outermost covariant derivative on
/// factor `owner`, contracted against the term's first free index.
inline Rational evaluate_with_extra_derivative(const Contraction& c, int owner,
                                               const EvalEnv& env, oracle::Memo& memo) {
    oracle::Labeled r = oracle::eval_term_network(c, env, false, env.order(), memo, owner);
    Rational v = r.t.e.empty() ? Rational(0) : r.t.e.begin()->second.at0();
    // The divergence line replaces the free saturation line, so the net
    // contraction count (and hence the scale exponent) is unchanged.
    return v * oracle::rat_pow(env.jet.scale, scale_exponent(c));
}

inline Rational evaluate_with_extra_derivative(const Contraction& c, int owner,
                                               const EvalEnv& env) {
    oracle::Memo memo;
    return evaluate_with_extra_derivative(c, owner, env, memo);
}

/// Exact covariant divergence nabla_i C^i at the origin for a rank-1
/// contraction (computed from degree-1 jets of the contracted field).
inline Rational divergence_value(const Contraction& c, const EvalEnv& env) {
    if (c.free.size() != 1)
        throw std::invalid_argument("divergence_value: exactly one free index required");
    oracle::Memo memo;
    oracle::Labeled r = oracle::eval_term_network(c, env, true, 1, memo, -1, true);
    if (r.t.rank != 1) throw std::logic_error("divergence_value: unexpected rank");
    int n = env.n();
    std::vector<Poly> C(n, Poly::zero(n, env.order()));
    for (const auto& [idx, p] : r.t.e) C[idx[0]] = p;
    const auto& inv = env.ginv();
    // V^i = g^{ij} C_j; div = d_i V^i + Gamma^i_{ie} V^e at the origin.
    std::vector<Poly> V(n, Poly::zero(n, env.order()));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (!inv[i][j].is_zero() && !C[j].is_zero()) V[i] += (inv[i][j] * C[j]).truncated(1);
    Rational div(0);
    for (int i = 0; i < n; ++i) {
        div += V[i].dx(i).at0();
        for (int e = 0; e < n; ++e) div += env.gamma_at(i, i, e).at0() * V[e].at0();
    }
    return div;
}

struct Verdict {
    bool pass = true;
    int witness_dim = 0;
    std::uint64_t witness_seed = 0;
    Rational residual = Rational(0);
};

/// Jet order needed to evaluate lc exactly: two beyond the deepest
/// covariant-derivative depth of any factor.
inline int required_order(const LinComb& lc) {
    int depth = 1;
    for (const auto& t : lc.terms)
        for (const auto& f : t.c.factors) {
            int d = f.deriv_block();
            if (f.is_curvature()) d += 2;
            else if (f.tag == FactorTag::OmegaAnti) d += 1;
            else if (f.is_gradient()) d = 1;
            depth = std::max(depth, d);
        }
    return depth + 2;
}

/// Total index count of a linear combination (drives the auto dimension).
inline int total_index_count(const LinComb& lc) {
    int m = 2;
    for (const auto& t : lc.terms) m = std::max(m, t.c.total_slots());
    return m;
}

/**
 * Randomized exact identity test: PASS iff lhs - rhs evaluates to exactly
 * zero on `trials` random environments in each requested dimension
 * (empty dims = the single automatic dimension n = total index count).
 */
inline Verdict check_identity(const LinComb& lhs, const LinComb& rhs, int trials = 8,
                              std::vector<int> dims = {}, std::uint64_t seed = 12345) {
    LinComb diff = lhs - rhs;
    if (dims.empty()) dims.push_back(total_index_count(diff));
    int order = required_order(diff);
    for (int n : dims)
        for (int k = 0; k < trials; ++k) {
            EvalEnv env = random_env(n, order, seed + 977 * k + 13 * n);
            Rational v = evaluate(diff, env);
            if (v != 0) return {false, n, env.seed, v};
        }
    return {};
}

/**
 * Weight scaling check: evaluating on g -> t^2 g must multiply the value
 * of a complete contraction by exactly t^weight (for a field with free
 * indices, by t^(weight - rank), since each saturation contributes one
 * inverse metric).
 */
inline Verdict check_weight_scaling(const Contraction& c, const Rational& t,
                                    const EvalEnv& env) {
    if (t == 0) throw std::invalid_argument("check_weight_scaling: t must be nonzero");
    Stats st = c.stats();
    int expo = st.weight - st.mu;
    Rational v1 = evaluate_term(c, env);
    EvalEnv env2 = scaled_env(env, t * t);
    Rational v2 = evaluate_term(c, env2);
    // t^2 scaling of g realizes the exponent through (t^2)^E = t^(2E),
    // 2E = weight - rank; compare exactly.
    Rational expected = v1 * oracle::rat_pow(t, expo);
    if (v2 != expected) return {false, env.n(), env.seed, v2 - expected};
    return {};
}

/// Component table of nabla^(m) R with every slot open (self-test helper);
/// index order: derivative slots outermost-first, then i, j, k, l.
inline oracle::TensorAt nabla_R(const EvalEnv& env, int m) {
    oracle::TensorAt t{env.n(), 4, {}};
    for (const auto& [idx, p] : env.riemann()) t.add(idx, p);
    for (int k = 0; k < m; ++k) t = oracle::nabla_open(env, t);
    return t;
}

} // namespace contracta
