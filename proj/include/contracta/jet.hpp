/**
 * @brief Exact polynomial-jet substrate: sparse truncated multivariate
 * polynomials over the rationals, random metric jets (identity plus a
 * small sparse perturbation), Christoffel and curvature jets, and scalar
 * function jets — everything the pointwise oracle needs.
 *
 * The metric is stored as g = scale * (delta + h) with h(0) = 0; all jet
 * arithmetic runs on (delta + h), and the scale enters evaluation as an
 * exact global power (curvature factors scale linearly, every contraction
 * contributes one inverse metric).
 */
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rational.hpp"

namespace contracta {

/// Sparse polynomial in n variables with rational coefficients, truncated
/// at total degree `order`.
struct Poly {
    int n = 0;
    int order = 0;
    std::map<std::vector<int>, Rational> coef;

    static Poly zero(int n, int order) { return {n, order, {}}; }
    static Poly constant(int n, int order, Rational v) {
        Poly p{n, order, {}};
        if (v != 0) p.coef.emplace(std::vector<int>(n, 0), std::move(v));
        return p;
    }

    bool is_zero() const { return coef.empty(); }
    Rational at0() const {
        auto it = coef.find(std::vector<int>(n, 0));
        return it == coef.end() ? Rational(0) : it->second;
    }

    void add_term(const std::vector<int>& mono, const Rational& v) {
        int deg = 0;
        for (int e : mono) deg += e;
        if (deg > order || v == 0) return;
        auto [it, inserted] = coef.emplace(mono, v);
        if (!inserted) {
            it->second += v;
            if (it->second == 0) coef.erase(it);
        }
    }

    Poly& operator+=(const Poly& o) {
        for (const auto& [m, v] : o.coef) add_term(m, v);
        return *this;
    }
    Poly& operator-=(const Poly& o) {
        for (const auto& [m, v] : o.coef) add_term(m, -v);
        return *this;
    }
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }

    /// Product truncated at the tighter of the two operand orders. Terms
    /// are bucketed by total degree so pairs above the cutoff are skipped
    /// before any coefficient arithmetic.
    friend Poly operator*(const Poly& a, const Poly& b) {
        int cut = std::min(a.order, b.order);
        Poly out{a.n, cut, {}};
        if (a.coef.empty() || b.coef.empty()) return out;
        struct Term {
            const std::vector<int>* m;
            const Rational* v;
        };
        std::map<int, std::vector<Term>> bucket;
        int bmin = cut + 1;
        for (const auto& [mb, vb] : b.coef) {
            int d = 0;
            for (int e : mb) d += e;
            if (d > cut) continue;
            bucket[d].push_back({&mb, &vb});
            bmin = std::min(bmin, d);
        }
        std::vector<int> mono(a.n);
        for (const auto& [ma, va] : a.coef) {
            int da = 0;
            for (int e : ma) da += e;
            if (da + bmin > cut) continue;
            for (const auto& [db, terms] : bucket) {
                if (da + db > cut) break;
                for (const auto& t : terms) {
                    for (int i = 0; i < a.n; ++i) mono[i] = ma[i] + (*t.m)[i];
                    out.add_term(mono, va * *t.v);
                }
            }
        }
        return out;
    }
    Poly& operator*=(const Rational& s) {
        if (s == 0) { coef.clear(); return *this; }
        for (auto& [m, v] : coef) v *= s;
        return *this;
    }
    friend Poly operator*(Poly a, const Rational& s) { return a *= s; }

    /// Partial derivative with respect to variable a.
    Poly dx(int a) const {
        Poly out{n, order, {}};
        for (const auto& [m, v] : coef) {
            if (m[a] == 0) continue;
            std::vector<int> mono = m;
            mono[a]--;
            out.add_term(mono, v * m[a]);
        }
        return out;
    }

    /// Drop every monomial of total degree above d and lower the declared
    /// order, so later products of the result truncate there too.
    Poly truncated(int d) const {
        Poly out{n, std::min(order, d), {}};
        for (const auto& [m, v] : coef) {
            int deg = 0;
            for (int e : m) deg += e;
            if (deg <= d) out.coef.emplace(m, v);
        }
        return out;
    }
};

/// Deterministic 64-bit splitmix generator for reproducible jets.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    /// Uniform integer in [lo, hi].
    int range(int lo, int hi) { return lo + static_cast<int>(next() % (hi - lo + 1)); }
    /// Small random rational: numerator in [-9, 9] \ {0}, denominator in {1..4}.
    Rational coeff() {
        int num = 0;
        while (num == 0) num = range(-9, 9);
        return Rational(num, range(1, 4));
    }
};

inline std::uint64_t hash_label(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) h = (h ^ ch) * 1099511628211ULL;
    return h;
}

struct MetricJet {
    int n = 0;
    int order = 2;
    std::vector<std::vector<Poly>> h; ///< symmetric perturbation, h(0) = 0
    Rational scale = Rational(1);     ///< g = scale * (delta + h)
};

struct EvalEnv {
    MetricJet jet;
    std::uint64_t seed = 0;
    mutable std::map<std::string, Poly> scalars;

    // Caches (per env, built on demand).
    mutable std::vector<std::vector<Poly>> ginv_cache;
    mutable std::vector<Poly> gamma_cache;                 ///< [e*n*n + a*n + b]
    mutable std::map<std::vector<int>, Poly> riemann_cache;
    mutable bool curv_ready = false;

    int n() const { return jet.n; }
    int order() const { return jet.order; }

    /// Scalar jet for a label ("Omega:3", "phi:2", "ups", "Y", "w1", ...),
    /// generated deterministically from the env seed on first use: a sparse
    /// polynomial with a guaranteed nonzero linear part.
    const Poly& scalar(const std::string& label) const {
        auto it = scalars.find(label);
        if (it != scalars.end()) return it->second;
        Rng rng(seed * 0x100000001b3ULL ^ hash_label(label));
        Poly p = Poly::zero(jet.n, jet.order);
        for (int d = 1; d <= jet.order; ++d) {
            int terms = d == 1 ? 2 : rng.range(1, 2);
            for (int t = 0; t < terms; ++t) {
                std::vector<int> mono(jet.n, 0);
                int rem = d;
                while (rem > 0) {
                    mono[rng.range(0, jet.n - 1)]++;
                    --rem;
                }
                p.add_term(mono, rng.coeff());
            }
        }
        // Guarantee a nonzero gradient at the origin.
        std::vector<int> lin(jet.n, 0);
        lin[static_cast<int>(hash_label(label) % jet.n)] = 1;
        if (p.dx(static_cast<int>(hash_label(label) % jet.n)).at0() == 0)
            p.add_term(lin, Rational(1));
        scalars.emplace(label, std::move(p));
        return scalars.at(label);
    }

    /// Inverse of (delta + h) by the Neumann series — exact at truncation
    /// because h has no constant term.
    const std::vector<std::vector<Poly>>& ginv() const {
        if (!ginv_cache.empty()) return ginv_cache;
        int N = jet.n, ord = jet.order;
        // Powers of h accumulated as inv = delta - h + h^2 - ...
        std::vector<std::vector<Poly>> inv(N, std::vector<Poly>(N, Poly::zero(N, ord)));
        std::vector<std::vector<Poly>> pw = jet.h; // h^1
        for (int a = 0; a < N; ++a) inv[a][a] = Poly::constant(N, ord, Rational(1));
        int sign = -1;
        for (int k = 1; k <= ord; ++k) {
            bool nonzero = false;
            for (int a = 0; a < N; ++a)
                for (int b = 0; b < N; ++b)
                    if (!pw[a][b].is_zero()) {
                        Poly t = pw[a][b];
                        t *= Rational(sign);
                        inv[a][b] += t;
                        nonzero = true;
                    }
            if (!nonzero) break;
            if (k < ord) {
                std::vector<std::vector<Poly>> nx(N, std::vector<Poly>(N, Poly::zero(N, ord)));
                for (int a = 0; a < N; ++a)
                    for (int b = 0; b < N; ++b) {
                        if (pw[a][b].is_zero()) continue;
                        for (int c = 0; c < N; ++c) {
                            if (jet.h[b][c].is_zero()) continue;
                            nx[a][c] += pw[a][b] * jet.h[b][c];
                        }
                    }
                pw = std::move(nx);
            }
            sign = -sign;
        }
        ginv_cache = std::move(inv);
        return ginv_cache;
    }

    /// Christoffel symbols of (delta + h): Gamma^e_{ab}, flat index e*n^2+a*n+b.
    const std::vector<Poly>& gamma() const {
        if (!gamma_cache.empty()) return gamma_cache;
        int N = jet.n, ord = jet.order;
        // The evaluator never needs Christoffel jets beyond degree ord-1:
        // the jet order carries a two-degree margin over the deepest
        // derivative chain, and one derivative of g is already spent here.
        int cord = std::max(1, ord - 1);
        auto g_at = [&](int a, int b) {
            Poly p = jet.h[a][b];
            if (a == b) p += Poly::constant(N, ord, Rational(1));
            return p;
        };
        const auto& inv = ginv();
        std::vector<Poly> G(static_cast<size_t>(N) * N * N, Poly::zero(N, cord));
        Rational half(1, 2);
        for (int c = 0; c < N; ++c)
            for (int a = 0; a < N; ++a)
                for (int b = a; b < N; ++b) {
                    Poly low = g_at(c, b).dx(a) + g_at(c, a).dx(b) - g_at(a, b).dx(c);
                    if (low.is_zero()) continue;
                    low *= half;
                    low = low.truncated(cord);
                    for (int e = 0; e < N; ++e) {
                        if (inv[e][c].is_zero()) continue;
                        Poly t = inv[e][c] * low;
                        G[static_cast<size_t>(e) * N * N + a * N + b] += t;
                        if (a != b) G[static_cast<size_t>(e) * N * N + b * N + a] += t;
                    }
                }
        gamma_cache = std::move(G);
        return gamma_cache;
    }

    const Poly& gamma_at(int e, int a, int b) const {
        return gamma()[static_cast<size_t>(e) * jet.n * jet.n + a * jet.n + b];
    }

    /// Fully covariant Riemann tensor jets R_{abcd} of (delta + h), sparse
    /// over nonzero components.
    const std::map<std::vector<int>, Poly>& riemann() const {
        if (curv_ready) return riemann_cache;
        int N = jet.n;
        // Curvature jets are needed to two degrees below the jet order
        // (two derivatives of g are spent reaching R).
        int rord = std::max(1, jet.order - 2);
        const auto& G = gamma();
        auto at = [&](int e, int a, int b) -> const Poly& {
            return G[static_cast<size_t>(e) * N * N + a * N + b];
        };
        // R^e_{bcd} = d_c Gamma^e_{db} - d_d Gamma^e_{cb}
        //           + Gamma^e_{cf} Gamma^f_{db} - Gamma^e_{df} Gamma^f_{cb};
        // lower with g_{ae} = delta + h.
        std::map<std::vector<int>, Poly> up;
        for (int e = 0; e < N; ++e)
            for (int b = 0; b < N; ++b)
                for (int c = 0; c < N; ++c)
                    for (int d = c + 1; d < N; ++d) {
                        Poly r = at(e, d, b).dx(c) - at(e, c, b).dx(d);
                        for (int f = 0; f < N; ++f) {
                            if (!at(e, c, f).is_zero() && !at(f, d, b).is_zero())
                                r += at(e, c, f) * at(f, d, b);
                            if (!at(e, d, f).is_zero() && !at(f, c, b).is_zero())
                                r -= at(e, d, f) * at(f, c, b);
                        }
                        r = r.truncated(rord);
                        if (!r.is_zero()) up.emplace(std::vector<int>{e, b, c, d}, std::move(r));
                    }
        std::map<std::vector<int>, Poly> low;
        for (const auto& [idx, r] : up) {
            int e = idx[0], b = idx[1], c = idx[2], d = idx[3];
            for (int a = 0; a < N; ++a) {
                Poly t = a == e ? r : Poly::zero(N, rord);
                if (!jet.h[a][e].is_zero()) t += jet.h[a][e] * r;
                if (t.is_zero()) continue;
                auto add = [&](int i, int j, int k, int l, bool neg) {
                    std::vector<int> key{i, j, k, l};
                    Poly v = t;
                    if (neg) v *= Rational(-1);
                    auto it = low.find(key);
                    if (it == low.end()) low.emplace(std::move(key), std::move(v));
                    else {
                        it->second += v;
                        if (it->second.is_zero()) low.erase(it);
                    }
                };
                add(a, b, c, d, false);
                add(a, b, d, c, true); // antisymmetry in the last pair
            }
        }
        riemann_cache = std::move(low);
        curv_ready = true;
        return riemann_cache;
    }
};

/**
 * Reproducible random environment: g = identity + (1/10) * sparse random
 * perturbation with no constant term (numerators in [-9, 9], denominators
 * in {1..4}), and deterministic scalar jets for every label on demand.
 */
inline EvalEnv random_env(int n, int order, std::uint64_t seed) {
    if (n < 2 || order < 2) throw std::invalid_argument("random_env: need n >= 2, order >= 2");
    EvalEnv env;
    env.seed = seed;
    env.jet.n = n;
    env.jet.order = order;
    env.jet.h.assign(n, std::vector<Poly>(n, Poly::zero(n, order)));
    Rng rng(seed);
    Rational tenth(1, 10);
    // Sparse support: a handful of nonzero (a<=b) metric entries, each with
    // one or two monomials per degree starting at degree 1. The support is
    // re-randomized per seed, so independent trials probe different
    // components; keeping it small keeps the curvature jets sparse without
    // biasing any fixed direction.
    int entries = std::max(2, n / 2);
    for (int t = 0; t < entries; ++t) {
        int a = rng.range(0, n - 1), b = rng.range(0, n - 1);
        if (a > b) std::swap(a, b);
        Poly p = Poly::zero(n, order);
        for (int d = 1; d <= order; ++d) {
            int terms = rng.range(1, 2);
            for (int q = 0; q < terms; ++q) {
                std::vector<int> mono(n, 0);
                int rem = d;
                while (rem > 0) {
                    mono[rng.range(0, n - 1)]++;
                    --rem;
                }
                p.add_term(mono, rng.coeff() * tenth);
            }
        }
        env.jet.h[a][b] += p;
        if (a != b) env.jet.h[b][a] += p;
    }
    return env;
}

/// A copy of env with the metric rescaled by the constant factor s (g -> s*g).
inline EvalEnv scaled_env(const EvalEnv& env, const Rational& s) {
    if (s == 0) throw std::invalid_argument("scaled_env: zero scale");
    EvalEnv out;
    out.jet = env.jet;
    out.jet.scale = env.jet.scale * s;
    out.seed = env.seed;
    return out;
}

} // namespace contracta
