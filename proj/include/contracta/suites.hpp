/**
 * @brief Acceptance suites: the nine property groups gating the artifact.
 *
 * Each group returns a CheckResult with a pass flag, wall time, and a
 * diagnostic string for the first failure. All randomness is seeded, all
 * comparisons are exact rational equality (tolerance zero); runtime
 * targets are asserted by the callers that print the report.
 */
#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "canonical.hpp"
#include "character.hpp"
#include "evaluate.hpp"
#include "gates.hpp"
#include "generate.hpp"
#include "parse.hpp"
#include "predicates.hpp"
#include "print.hpp"
#include "rewrite.hpp"
#include "rules.hpp"

namespace contracta::suites {

struct CheckResult {
    std::string name;
    bool ok = true;
    long long ms = 0;
    std::string detail; ///< first failure diagnostic, or a one-line summary

    void fail(std::string why) {
        if (ok) detail = std::move(why);
        ok = false;
    }
};

namespace sdetail {

inline long long now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

inline Contraction parse1(const std::string& s) { return parse(s).terms.at(0).c; }

inline LinComb single(const Contraction& c) { return LinComb::single(Rational(1), c); }

/// Record a check_identity verdict under a label.
inline void expect_pass(CheckResult& r, const std::string& label, const Verdict& v) {
    if (!v.pass)
        r.fail(label + ": FAIL (dim " + std::to_string(v.witness_dim) + ", seed " +
               std::to_string(v.witness_seed) + ", residual " + to_string(v.residual) + ")");
}

} // namespace sdetail

/// Group 1: curvature symmetries exact on 8 random envs, n in {4,5,6}.
inline CheckResult oracle_selftest(std::uint64_t seed = 12345) {
    CheckResult r;
    r.name = "oracle-selftest";
    long long t0 = sdetail::now_ms();
    for (int k = 0; k < 8 && r.ok; ++k) {
        int n = 4 + k % 3;
        EvalEnv env = random_env(n, 5, seed + k);
        const auto& R = env.riemann();
        auto at = [&](int a, int b, int c, int d) {
            auto it = R.find({a, b, c, d});
            return it == R.end() ? Poly::zero(n, 1) : it->second;
        };
        for (int a = 0; a < n && r.ok; ++a)
            for (int b = 0; b < n && r.ok; ++b)
                for (int c = 0; c < n && r.ok; ++c)
                    for (int d = 0; d < n && r.ok; ++d) {
                        if (!(at(a, b, c, d) + at(b, a, c, d)).is_zero())
                            r.fail("antisymmetry (ij) violated");
                        else if (!(at(a, b, c, d) + at(a, b, d, c)).is_zero())
                            r.fail("antisymmetry (kl) violated");
                        else if (!(at(a, b, c, d) - at(c, d, a, b)).is_zero())
                            r.fail("pair symmetry violated");
                        else if (!(at(a, b, c, d) + at(a, c, d, b) + at(a, d, b, c)).is_zero())
                            r.fail("first Bianchi violated");
                    }
        if (!r.ok) break;
        // Second Bianchi at the base point from the rank-5 derivative table.
        oracle::Memo memo;
        const oracle::TensorAt& dR = oracle::riemann_iterate(env, memo, 1, 0);
        auto dat = [&](int e, int a, int b, int c, int d) {
            auto it = dR.e.find(oracle::Multi{e, a, b, c, d});
            return it == dR.e.end() ? Rational(0) : it->second.at0();
        };
        for (int e = 0; e < n && r.ok; ++e)
            for (int a = 0; a < n && r.ok; ++a)
                for (int b = 0; b < n && r.ok; ++b)
                    for (int c = 0; c < n && r.ok; ++c)
                        for (int d = 0; d < n && r.ok; ++d)
                            if (dat(e, a, b, c, d) + dat(a, b, e, c, d) +
                                    dat(b, e, a, c, d) !=
                                0)
                                r.fail("second Bianchi violated");
    }
    r.ms = sdetail::now_ms() - t0;
    if (r.ok) r.detail = "8 envs, all classical symmetries exact";
    return r;
}

/// Group 2: the EXACT rewrite rules hold as oracle identities.
inline CheckResult exact_rules(std::uint64_t seed = 12345) {
    using sdetail::expect_pass;
    using sdetail::parse1;
    using sdetail::single;
    CheckResult r;
    r.name = "exact-rules";
    long long t0 = sdetail::now_ms();

    for (int m : {1, 2, 3}) {
        if (!r.ok) break;
        std::string frees = "f1.j, f1.k, f1.l";
        for (int q = 1; q <= m; ++q) frees = "f1.r" + std::to_string(q) + ", " + frees;
        Contraction c =
            parse1("contr(CR[m=" + std::to_string(m) + "], ph[1]; f1.i-f2.a; " + frees + ")");
        expect_pass(r, "sstar_decompose m=" + std::to_string(m),
                    check_identity(single(c), sstar_decompose(c, 0), 8, {}, seed));
    }

    if (r.ok) {
        Contraction c = parse1("contr(CR[m=0], ph[1], up; f1.i-f2.a, f1.k-f3.a; f1.j, f1.l)");
        expect_pass(r, "koichi1",
                    check_identity(single(c), bianchi_correction(c, Koichi::K1), 8, {}, seed));
    }
    if (r.ok) {
        Contraction c =
            parse1("contr(CR[m=1], ph[1], up; f1.i-f2.a, f1.k-f3.a; f1.r1, f1.j, f1.l)");
        expect_pass(r, "koichi2",
                    check_identity(single(c), bianchi_correction(c, Koichi::K2), 8, {}, seed));
        if (r.ok)
            expect_pass(r, "koichi3", check_identity(single(c), bianchi_correction(c, Koichi::K3),
                                                     8, {}, seed));
    }

    // Full divergence vs owner term + Xdiv expansion.
    if (r.ok) {
        Contraction c = parse1(
            "contr(CR[m=0], CR[m=0], Om[h=1,b=1]; "
            "f1.j-f2.j, f1.k-f2.k, f1.l-f2.l, f2.i-f3.d1; f1.i)");
        int n = c.total_slots(); // dims = auto for the divergence comparison
        for (int k = 0; k < 8 && r.ok; ++k) {
            EvalEnv env = random_env(n, 5, seed + 977 * k);
            Rational lhs = divergence_value(c, env);
            Rational rhs = evaluate_with_extra_derivative(c, 0, env);
            for (const auto& t : xdiv_expand(c, c.free[0]).terms)
                rhs += t.coeff * evaluate_term(t.c, env);
            if (lhs != rhs)
                r.fail("full-div-vs-expansion: mismatch at seed " +
                       std::to_string(seed + 977 * k));
        }
    }

    // OMEGA_TRIPLE defining instance: the cyclic first-Bianchi sum in the
    // (j,k,l) slots vanishes exactly, before and after the substitution
    // (distinct gradient polarizations keep the sum nontrivial termwise).
    if (r.ok) {
        const char* pol[3] = {"f3.a", "f4.a", "f5.a"};
        LinComb before, after;
        for (int cyc = 0; cyc < 3 && r.ok; ++cyc) {
            std::string st = "contr(SR[v=0], ph~[1], ph[2], ph[3], up; f1.i-f2.a, f1.j-" +
                             std::string(pol[cyc % 3]) + ", f1.k-" + pol[(cyc + 1) % 3] +
                             ", f1.l-" + pol[(cyc + 2) % 3] + " ;)";
            Contraction c = sdetail::parse1(st);
            before.terms.push_back({Rational(1), c});
            RewriteRule rule{"OMEGA_TRIPLE", 0, -1, {}};
            for (const auto& t : apply_substitution(c, rule).terms)
                after.terms.push_back(t);
        }
        expect_pass(r, "omega-triple cyclic (before)", check_identity(before, {}, 8, {}, seed));
        if (r.ok)
            expect_pass(r, "omega-triple cyclic (after)", check_identity(after, {}, 8, {}, seed));
    }

    // symmetrize_free is the identity under the common-upsilon saturation.
    if (r.ok) {
        Contraction c = parse1("contr(CR[m=1], ph[1]; f1.i-f2.a; f1.r1, f1.j, f1.k, f1.l)");
        expect_pass(r, "symmetrize_free-with-upsilon",
                    check_identity(single(c),
                                   symmetrize_free(single(c), static_cast<int>(c.free.size())),
                                   8, {}, seed));
    }

    r.ms = sdetail::now_ms() - t0;
    if (r.ok) r.detail = "all EXACT catalog identities PASS (8 trials, dims auto)";
    return r;
}

/// Group 3: evaluation scales as t^weight under g -> t^2 g.
inline CheckResult weight_scaling(std::uint64_t seed = 2025) {
    CheckResult r;
    r.name = "weight-scaling";
    long long t0 = sdetail::now_ms();
    std::mt19937_64 rng(seed);
    for (int k = 0; k < 20 && r.ok; ++k) {
        Contraction c = random_field(rng);
        EvalEnv env = random_env(4, 5, seed + 31 * k);
        for (Rational t : {Rational(2), Rational(1, 2)}) {
            Verdict v = check_weight_scaling(c, t, env);
            if (!v.pass)
                r.fail("field " + std::to_string(k) + ", t=" + to_string(t) + ": residual " +
                       to_string(v.residual) + " on " + print(c));
        }
    }
    r.ms = sdetail::now_ms() - t0;
    if (r.ok) r.detail = "20 random fields x t in {2, 1/2} exact";
    return r;
}

/// Group 4: Xdiv term counts and target exclusions.
inline CheckResult xdiv_structure(std::uint64_t seed = 4242) {
    CheckResult r;
    r.name = "xdiv-structure";
    long long t0 = sdetail::now_ms();
    std::mt19937_64 rng(seed);
    GenOptions opt;
    opt.min_free = 1;
    auto gradients_of = [](const Contraction& c) {
        std::vector<Factor> g;
        for (const auto& f : c.factors)
            if (f.is_gradient()) g.push_back(f);
        std::sort(g.begin(), g.end(),
                  [](const Factor& a, const Factor& b) { return factor_key_less(a, b); });
        return g;
    };
    for (int k = 0; k < 50 && r.ok; ++k) {
        Contraction c = random_field(rng, opt);
        int sigma = c.stats().sigma;
        LinComb plain = xdiv_expand(c, c.free[0]);
        if (static_cast<int>(plain.terms.size()) != sigma - 1) {
            r.fail("plain policy: " + std::to_string(plain.terms.size()) + " terms, expected " +
                   std::to_string(sigma - 1) + " on " + print(c));
            break;
        }
        // Random extra exclusions among the non-owner real factors.
        ExclusionPolicy pol;
        int owner = c.free[0].factor;
        for (size_t fi = 0; fi < c.factors.size(); ++fi)
            if (static_cast<int>(fi) != owner && !c.factors[fi].is_gradient() &&
                std::uniform_int_distribution<int>(0, 1)(rng))
                pol.forbid_factors.push_back(static_cast<int>(fi));
        LinComb excl = xdiv_expand(c, c.free[0], pol);
        int want = sigma - 1 - static_cast<int>(pol.forbid_factors.size());
        if (static_cast<int>(excl.terms.size()) != want) {
            r.fail("exclusion policy: " + std::to_string(excl.terms.size()) +
                   " terms, expected " + std::to_string(want));
            break;
        }
        // No term may differentiate a gradient factor.
        auto base = gradients_of(c);
        for (const auto& t : plain.terms)
            if (gradients_of(t.c) != base) r.fail("a term hit a gradient factor");
    }
    r.ms = sdetail::now_ms() - t0;
    if (r.ok) r.detail = "50 random fields: counts sigma-1 (-exclusions), gradients untouched";
    return r;
}

/// Group 5: character laws (permutation invariance, gradedness, preorder).
inline CheckResult character_laws(std::uint64_t seed = 5150) {
    CheckResult r;
    r.name = "character-laws";
    long long t0 = sdetail::now_ms();
    std::mt19937_64 rng(seed);
    for (int k = 0; k < 1000 && r.ok; ++k) {
        Contraction c = random_field(rng);
        std::vector<int> perm(c.factors.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Contraction p = detail::permute_factors(c, perm);
        if (!(weak_character(c) == weak_character(p)))
            r.fail("weak character not permutation invariant");
        else if (!(simple_character(c) == simple_character(p)))
            r.fail("simple character not permutation invariant");
        else if (!(refined_double_character(c, -1, false) ==
                   refined_double_character(p, -1, false)))
            r.fail("double character not permutation invariant");
        else if (!(refined_double_character(c) == refined_double_character(p)))
            r.fail("refined character not permutation invariant");
        else if (!(weak_of(simple_character(c)) == weak_character(c)))
            r.fail("weak_of(simple) != weak");
        else if (!(simple_of(refined_double_character(c)) == simple_character(c)))
            r.fail("simple_of(refined) != simple");
    }
    auto leq = [](Order o) { return o != Order::Subsequent; };
    for (int k = 0; k < 1000 && r.ok; ++k) {
        auto fields = random_fields(rng, 3);
        RefinedDoubleChar a = refined_double_character(fields[0]);
        RefinedDoubleChar b = refined_double_character(fields[1]);
        RefinedDoubleChar c3 = refined_double_character(fields[2]);
        Order ab = compare_refined(a, b), ba = compare_refined(b, a);
        Order bc = compare_refined(b, c3), ac = compare_refined(a, c3);
        if (compare_refined(a, a) != Order::Equipolent) r.fail("compare(k,k) != Equipolent");
        if ((ab == Order::Precedent) != (ba == Order::Subsequent) ||
            (ab == Order::Equipolent) != (ba == Order::Equipolent))
            r.fail("compare not antisymmetric-consistent");
        if (leq(ab) && leq(bc) && !leq(ac)) r.fail("preorder not transitive");
        if (ab == Order::Equipolent && bc == Order::Equipolent && ac != Order::Equipolent)
            r.fail("equipolence not transitive");
    }
    r.ms = sdetail::now_ms() - t0;
    if (r.ok) r.detail = "1000 fields + 1000 shared-character triples";
    return r;
}

/// Group 6: the sigma2=1 forbidden fixture and its single-clause flips.
inline CheckResult forbidden_fixture() {
    using sdetail::parse1;
    CheckResult r;
    r.name = "forbidden-fixture";
    long long t0 = sdetail::now_ms();
    struct Fx {
        const char* what;
        const char* stanza;
        bool forbidden;
    };
    const Fx fixtures[] = {
        {"base",
         "contr(SR[v=0], Om[h=1,b=2], CR[m=2], ph~[1], ph[2], ph[3]; "
         "f1.i-f4.a, f3.r1-f5.a, f3.r2-f6.a, f1.j-f3.i, f1.l-f3.j, f2.d1-f3.k, f2.d2-f3.l; "
         "f1.k)",
         true},
        {"Omega b=3 with a free index",
         "contr(SR[v=0], Om[h=1,b=3], CR[m=2], ph~[1], ph[2], ph[3]; "
         "f1.i-f4.a, f3.r1-f5.a, f3.r2-f6.a, f1.j-f3.i, f1.l-f3.j, f2.d1-f3.k, f2.d2-f3.l; "
         "f1.k, f2.d3)",
         false},
        {"nu=1 on the S* factor",
         "contr(SR[v=1], Om[h=1,b=2], CR[m=2], ph~[1], ph[2], ph[3], ph[4]; "
         "f1.r1-f7.a, f1.i-f4.a, f3.r1-f5.a, f3.r2-f6.a, f1.j-f3.i, f1.l-f3.j, "
         "f2.d1-f3.k, f2.d2-f3.l; f1.k)",
         false},
        {"free derivative index on the generic factor",
         "contr(SR[v=0], Om[h=1,b=2], CR[m=3], ph~[1], ph[2], ph[3]; "
         "f1.i-f4.a, f3.r1-f5.a, f3.r2-f6.a, f1.j-f3.i, f1.l-f3.j, f2.d1-f3.k, f2.d2-f3.l; "
         "f1.k, f3.r3)",
         false},
        {"S* special free index removed",
         "contr(SR[v=0], Om[h=1,b=2], CR[m=2], ph~[1], ph[2], ph[3], up; "
         "f1.i-f4.a, f3.r1-f5.a, f3.r2-f6.a, f1.j-f3.i, f1.l-f3.j, f1.k-f7.a, "
         "f2.d1-f3.k, f2.d2-f3.l ;)",
         false},
        {"generic derivative slot not phi-saturated",
         "contr(SR[v=0], Om[h=1,b=2], CR[m=2], ph~[1], ph[2], up; "
         "f1.i-f4.a, f3.r1-f5.a, f3.r2-f6.a, f1.j-f3.i, f1.l-f3.j, f2.d1-f3.k, f2.d2-f3.l; "
         "f1.k)",
         false},
    };
    for (const auto& fx : fixtures) {
        Contraction c = parse1(fx.stanza);
        if (is_forbidden(c) != fx.forbidden)
            r.fail(std::string(fx.what) + ": expected " +
                   (fx.forbidden ? "forbidden" : "not forbidden"));
    }
    r.ms = sdetail::now_ms() - t0;
    if (r.ok) r.detail = "6 fixtures (base + 5 single-clause flips)";
    return r;
}

namespace sdetail {

/// Random instance admitting the cut rules: an S* (or generic) factor with
/// the required saturations, a companion curvature factor, random closure.
inline Contraction rule_site_field(std::mt19937_64& rng, const std::string& rule) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    Contraction c;
    bool sstar = rule != "CUT_SYM";
    int nu = rule == "OMEGA_TRIPLE" ? 0 : pick(rule == "CUT_Y" || rule == "CUT_SYM" ? 1 : 0, 2);
    c.factors.push_back(sstar ? Factor::curv_sstar(nu) : Factor::curv_generic(nu));
    c.factors.push_back(Factor::curv_generic(pick(0, 2)));
    int label = 0;
    auto attach = [&](int slot, Factor g) {
        c.factors.push_back(std::move(g));
        c.pairs.emplace_back(IndexRef{0, slot},
                             IndexRef{static_cast<int>(c.factors.size()) - 1, 0});
    };
    if (sstar) attach(nu, Factor::phi(++label, PhiFlavor::Tilde)); // i slot
    else attach(nu, Factor::phi(++label, PhiFlavor::Plain));       // i slot (CUT_SYM)
    if (rule == "TO_Y" || rule == "CUT_Y")
        attach(nu + 2, pick(0, 1) ? Factor::upsilon() : Factor::phi(++label));
    int a = rule == "CUT_Y" || rule == "CUT_SYM" ? pick(1, nu) : 0;
    for (int s = 0; s < a; ++s)
        attach(s, sstar ? Factor::phi(++label, PhiFlavor::Primed) : Factor::phi(++label));
    // Close the remaining slots randomly: pair across the two curvature
    // factors where possible, free otherwise.
    std::vector<IndexRef> open;
    for (int fi = 0; fi < 2; ++fi)
        for (int s = 0; s < c.factors[fi].arity(); ++s) {
            IndexRef here{fi, s};
            bool taken = false;
            for (const auto& pr : c.pairs)
                if (pr.a == here || pr.b == here) taken = true;
            if (!taken) open.push_back(here);
        }
    std::shuffle(open.begin(), open.end(), rng);
    while (!open.empty()) {
        IndexRef x = open.back();
        open.pop_back();
        auto it = std::find_if(open.begin(), open.end(),
                               [&](IndexRef y) { return y.factor != x.factor; });
        if (it != open.end() && pick(0, 1)) {
            c.pairs.emplace_back(x, *it);
            open.erase(it);
        } else {
            c.free.push_back(x);
        }
    }
    c.sort_pairs();
    if (auto err = c.validate()) throw std::logic_error("rule_site_field: " + *err);
    return c;
}

inline LinComb canon(const LinComb& lc) {
    LinComb out;
    for (const auto& t : lc.terms) out.terms.push_back({t.coeff, canonicalize(t.c)});
    return out.normalized();
}

} // namespace sdetail

/// Group 7: the four cut/substitute rule pairs invert exactly.
inline CheckResult round_trips(std::uint64_t seed = 777) {
    CheckResult r;
    r.name = "round-trips";
    long long t0 = sdetail::now_ms();
    std::mt19937_64 rng(seed);
    struct Pair {
        const char* fwd;
        const char* inv;
    };
    for (auto [fwd, inv] : {Pair{"TO_Y", "FROM_Y"}, Pair{"CUT_SYM", "ADD_BACK"},
                            Pair{"CUT_Y", "UN_Y"}, Pair{"OMEGA_TRIPLE", "OMEGA_TRIPLE_INV"}}) {
        for (int k = 0; k < 20 && r.ok; ++k) {
            Contraction c = sdetail::rule_site_field(rng, fwd);
            RewriteRule rule{fwd, 0, -1, {}};
            LinComb img;
            try {
                img = apply_substitution(c, rule);
            } catch (const std::invalid_argument& e) {
                r.fail(std::string(fwd) + ": inadmissible generated site: " + e.what() +
                       " on " + print(c));
                break;
            }
            RewriteRule back{inv, -1, -1, rule.params};
            if (std::string(fwd) == "OMEGA_TRIPLE") {
                // The inverse reconstructs the S* from the principal
                // (positive) image term; the pair term is its (k,l) swap.
                if (img.terms.size() != 2) {
                    r.fail("OMEGA_TRIPLE: expected a two-term image");
                    break;
                }
                Contraction got = apply_substitution(img.terms[0].c, back).terms.at(0).c;
                if (!(canonicalize(got) == canonicalize(c)))
                    r.fail("OMEGA_TRIPLE round trip mismatch on " + print(c));
                // And the forward map reproduces the image from the rebuild.
                RewriteRule again{fwd, -1, -1, {}};
                if (r.ok &&
                    !(sdetail::canon(apply_substitution(got, again)) == sdetail::canon(img)))
                    r.fail("OMEGA_TRIPLE image not reproduced from the rebuild");
            } else {
                LinComb got = apply_substitution(img.terms.at(0).c, back);
                if (!(sdetail::canon(got) == sdetail::canon(sdetail::single(c))))
                    r.fail(std::string(fwd) + "/" + inv + " round trip mismatch on " + print(c));
            }
        }
    }
    r.ms = sdetail::now_ms() - t0;
    if (r.ok) r.detail = "4 rule pairs x 20 random admissible sites";
    return r;
}

/// Group 8: the petermichel erase-then-forbidden clause agrees with the
/// erase_factor + is_forbidden composition.
inline CheckResult gate_consistency(std::uint64_t seed = 8800) {
    CheckResult r;
    r.name = "gate-consistency";
    long long t0 = sdetail::now_ms();
    std::mt19937_64 rng(seed);
    GenOptions opt;
    opt.min_sigma = 3;
    opt.max_omega = 0; // keep the appended Omega the unique distinguished one
    for (int k = 0; k < 50 && r.ok; ++k) {
        Contraction c = random_field(rng, opt);
        // Append a distinguished Omega all of whose indices contract
        // against phi gradients (the Lemma-premise shape).
        int b = std::uniform_int_distribution<int>(1, 3)(rng);
        int label = 0;
        for (const auto& f : c.factors)
            if (f.tag == FactorTag::Phi && f.deriv <= 1) ++label;
        int di = static_cast<int>(c.factors.size());
        c.factors.push_back(Factor::omega(1, b));
        for (int s = 0; s < b; ++s) {
            c.factors.push_back(Factor::phi(++label));
            c.pairs.emplace_back(IndexRef{di, s},
                                 IndexRef{static_cast<int>(c.factors.size()) - 1, 0});
        }
        c.sort_pairs();
        bool expected = is_forbidden(erase_factor(c, di));
        GateReport rep = hypothesis_gate(GateId::PeterMichel, {c});
        bool flagged = false;
        for (const auto& v : rep.violations)
            if (v.find("forbidden") != std::string::npos) flagged = true;
        if (flagged != expected)
            r.fail("gate clause disagrees with erase_factor+is_forbidden on " + print(c));
    }
    r.ms = sdetail::now_ms() - t0;
    if (r.ok) r.detail = "50 random inputs, clause and composition agree";
    return r;
}

/// Group 9: parse/print/canonicalize round trip, byte-stable on a corpus.
inline CheckResult parser_roundtrip(const std::string& corpus_text) {
    CheckResult r;
    r.name = "parser-roundtrip";
    long long t0 = sdetail::now_ms();
    auto stanzas = split_stanzas(corpus_text);
    if (stanzas.size() < 100)
        r.fail("corpus has " + std::to_string(stanzas.size()) + " stanzas, need >= 100");
    for (const auto& st : stanzas) {
        if (!r.ok) break;
        LinComb lc;
        try {
            lc = parse(st);
        } catch (const ParseError& e) {
            r.fail("parse error: " + std::string(e.what()));
            break;
        }
        std::string p1 = print(lc);
        std::string p2 = print(parse(p1));
        if (p1 != p2) {
            r.fail("print/parse not byte-stable on: " + p1);
            break;
        }
        LinComb canon = sdetail::canon(lc);
        std::string c1 = print(canon);
        if (print(sdetail::canon(parse(c1))) != c1)
            r.fail("canonicalize round trip not byte-stable on: " + c1);
    }
    r.ms = sdetail::now_ms() - t0;
    if (r.ok) r.detail = std::to_string(stanzas.size()) + " stanzas byte-stable";
    return r;
}

/// Run the named suite group(s); "all" runs everything but the parser
/// group when no corpus is supplied.
inline std::vector<CheckResult> run_suite(const std::string& name,
                                          const std::string& corpus_text = {},
                                          std::uint64_t seed = 12345) {
    std::vector<CheckResult> out;
    bool all = name == "all";
    if (all || name == "oracle-selftest") out.push_back(oracle_selftest(seed));
    if (all || name == "exact-rules") out.push_back(exact_rules(seed));
    if (all || name == "predicates") {
        out.push_back(forbidden_fixture());
        out.push_back(xdiv_structure(seed));
        out.push_back(gate_consistency(seed));
    }
    if (all || name == "orderings") out.push_back(character_laws(seed));
    if ((all && !corpus_text.empty()) || name == "parser")
        out.push_back(parser_roundtrip(corpus_text));
    if (out.empty()) throw std::invalid_argument("unknown suite: " + name);
    return out;
}

} // namespace contracta::suites
