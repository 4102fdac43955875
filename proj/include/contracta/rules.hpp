/**
 * @brief The substitution-rule catalog: twelve formal rules mapping a
 * contraction at a site to a linear combination, with explicit
 * reconstruction descriptors for the invertible cut rules.
 *
 * Internally the rules work on an attachment graph (factor nodes whose
 * slots hold edge ids or free-position markers), which makes factor
 * surgery independent of slot renumbering.
 */
#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "edit.hpp"
#include "lincomb.hpp"

namespace contracta {

struct RewriteRule {
    std::string rule_id;
    int site = -1;  ///< primary factor position; -1 = locate automatically
    int site2 = -1; ///< secondary factor position for the two-factor rules
    /// Rule inputs and, after application, the reconstruction descriptor.
    std::map<std::string, std::string> params;
};

namespace gdetail {

/// One factor with per-slot attachments: positive values are edge ids
/// (each shared by exactly two slots), negative values -(p+1) mark the
/// free index at position p.
struct GNode {
    Factor f;
    std::vector<int> att;
};

struct Graph {
    std::vector<GNode> nodes;
    int next_edge = 1;

    int fresh_edge() { return next_edge++; }
};

inline Graph to_graph(const Contraction& c) {
    Graph g;
    for (const auto& f : c.factors) g.nodes.push_back({f, std::vector<int>(f.arity(), 0)});
    for (const auto& pr : c.pairs) {
        int e = g.fresh_edge();
        g.nodes[pr.a.factor].att[pr.a.slot] = e;
        g.nodes[pr.b.factor].att[pr.b.slot] = e;
    }
    for (size_t p = 0; p < c.free.size(); ++p)
        g.nodes[c.free[p].factor].att[c.free[p].slot] = -static_cast<int>(p + 1);
    return g;
}

inline Contraction from_graph(const Graph& g) {
    Contraction c;
    std::map<int, IndexRef> first;
    std::vector<std::pair<int, IndexRef>> frees; // (old position, slot)
    for (size_t ni = 0; ni < g.nodes.size(); ++ni) {
        c.factors.push_back(g.nodes[ni].f);
        if (static_cast<int>(g.nodes[ni].att.size()) != g.nodes[ni].f.arity())
            throw std::logic_error("rule graph: attachment count mismatch");
        for (size_t s = 0; s < g.nodes[ni].att.size(); ++s) {
            int a = g.nodes[ni].att[s];
            IndexRef here{static_cast<int>(ni), static_cast<int>(s)};
            if (a == 0) throw std::logic_error("rule graph: unattached slot");
            if (a < 0) {
                frees.emplace_back(-a - 1, here);
            } else if (auto it = first.find(a); it == first.end()) {
                first.emplace(a, here);
            } else {
                c.pairs.emplace_back(it->second, here);
                first.erase(it);
            }
        }
    }
    if (!first.empty()) throw std::logic_error("rule graph: dangling edge");
    std::sort(frees.begin(), frees.end());
    for (auto& [p, r] : frees) c.free.push_back(r);
    c.sort_pairs();
    return c;
}

/// Remove the listed nodes (descending order internally).
inline void drop_nodes(Graph& g, std::vector<int> which) {
    std::sort(which.rbegin(), which.rend());
    for (int ni : which) g.nodes.erase(g.nodes.begin() + ni);
}

/// The node index paired through edge e, excluding node `self`.
inline int edge_other(const Graph& g, int e, int self) {
    for (size_t ni = 0; ni < g.nodes.size(); ++ni) {
        if (static_cast<int>(ni) == self) continue;
        for (int a : g.nodes[ni].att)
            if (a == e) return static_cast<int>(ni);
    }
    return -1;
}

/// Describe a gradient node for a descriptor: flavor-tagged label.
inline std::string describe_gradient(const Factor& f) {
    if (f.tag == FactorTag::Upsilon) return "ups";
    if (f.tag == FactorTag::Phi && f.deriv <= 1) {
        switch (f.flavor) {
            case PhiFlavor::Plain: return "phi:" + std::to_string(f.label);
            case PhiFlavor::Primed: return "phip:" + std::to_string(f.label);
            case PhiFlavor::Tilde: return "phit:" + std::to_string(f.label);
        }
    }
    throw std::invalid_argument("rule site: expected a gradient factor");
}

/// Build a gradient node from a descriptor string.
inline Factor parse_gradient(const std::string& d) {
    if (d == "ups") return Factor::upsilon();
    auto colon = d.find(':');
    int label = colon == std::string::npos ? 1 : std::stoi(d.substr(colon + 1));
    if (d.rfind("phip", 0) == 0) return Factor::phi(label, PhiFlavor::Primed);
    if (d.rfind("phit", 0) == 0) return Factor::phi(label, PhiFlavor::Tilde);
    return Factor::phi(label, PhiFlavor::Plain);
}

/// Gradient node attached through slot `slot` of node ni, or -1.
inline int gradient_on(const Graph& g, int ni, int slot) {
    int e = g.nodes[ni].att[slot];
    if (e <= 0) return -1;
    int other = edge_other(g, e, ni);
    if (other < 0) return -1;
    const Factor& f = g.nodes[other].f;
    if (f.is_gradient() || (f.tag == FactorTag::OmegaFun && f.deriv == 1)) return other;
    return -1;
}

} // namespace gdetail

namespace detail {

inline int auto_site(const Contraction& c, FactorTag tag, int deriv = -1) {
    for (size_t fi = 0; fi < c.factors.size(); ++fi)
        if (c.factors[fi].tag == tag && (deriv < 0 || c.factors[fi].deriv == deriv))
            return static_cast<int>(fi);
    return -1;
}

inline int param_int(const RewriteRule& r, const std::string& key, int dflt) {
    auto it = r.params.find(key);
    return it == r.params.end() ? dflt : std::stoi(it->second);
}

inline std::string param_str(const RewriteRule& r, const std::string& key,
                             const std::string& dflt) {
    auto it = r.params.find(key);
    return it == r.params.end() ? dflt : it->second;
}

inline int next_plain_phi_label(const Contraction& c) {
    int u = 0;
    for (const auto& f : c.factors)
        if (f.tag == FactorTag::Phi && f.deriv <= 1 && f.flavor == PhiFlavor::Plain)
            u = std::max(u, f.label);
    return u + 1;
}

} // namespace detail

/**
 * Apply a catalog rule at its site. rule.params receives the
 * reconstruction descriptor for the cut rules (TO_Y, CUT_SYM, CUT_Y),
 * which the inverse rules (FROM_Y, ADD_BACK, UN_Y) read back.
 * Throws std::invalid_argument on a pattern mismatch.
 */
inline LinComb apply_substitution(const Contraction& c, RewriteRule& rule) {
    using namespace gdetail;
    const std::string& id = rule.rule_id;
    Graph g0 = to_graph(c);

    auto need = [](bool cond, const char* why) {
        if (!cond) throw std::invalid_argument(std::string("rule site: ") + why);
    };

    if (id == "TO_Y" || id == "CUT_Y") {
        int fi = rule.site >= 0 ? rule.site : detail::auto_site(c, FactorTag::CurvSstar);
        need(fi >= 0 && c.factors[fi].tag == FactorTag::CurvSstar, "expected an S* factor");
        Graph g = g0;
        int nu = g.nodes[fi].f.deriv;
        int cut = 0;
        std::vector<int> dead{fi};
        if (id == "CUT_Y") {
            // Cut the leading run of phi'-saturated derivative slots.
            int a = detail::param_int(rule, "a", -1);
            for (int s = 0; s < nu && (a < 0 || cut < a); ++s) {
                int gn = gradient_on(g, fi, s);
                if (gn < 0 || g.nodes[gn].f.tag != FactorTag::Phi ||
                    g.nodes[gn].f.flavor != PhiFlavor::Primed)
                    break;
                rule.params["cut" + std::to_string(cut + 1)] = describe_gradient(g.nodes[gn].f);
                dead.push_back(gn);
                ++cut;
            }
            need(a < 0 || cut == a, "fewer phi'-saturated slots than requested");
            rule.params["a"] = std::to_string(cut);
        }
        int ti = gradient_on(g, fi, nu);
        need(ti >= 0 && g.nodes[ti].f.tag == FactorTag::Phi &&
                 g.nodes[ti].f.flavor == PhiFlavor::Tilde,
             "i slot must carry a tilde phi");
        int ki = gradient_on(g, fi, nu + 2);
        need(ki >= 0, "k slot must carry a gradient");
        rule.params["tilde"] = std::to_string(g.nodes[ti].f.label);
        rule.params["k"] = describe_gradient(g.nodes[ki].f);
        dead.push_back(ti);
        dead.push_back(ki);

        GNode y{Factor::yfun(nu - cut + 2), {}};
        for (int s = cut; s < nu; ++s) y.att.push_back(g.nodes[fi].att[s]);
        y.att.push_back(g.nodes[fi].att[nu + 1]); // j
        y.att.push_back(g.nodes[fi].att[nu + 3]); // l
        drop_nodes(g, dead);
        g.nodes.push_back(std::move(y));
        return LinComb::single(Rational(1), from_graph(g));
    }

    if (id == "FROM_Y" || id == "UN_Y") {
        int fi = rule.site >= 0 ? rule.site : detail::auto_site(c, FactorTag::YFun);
        need(fi >= 0 && c.factors[fi].tag == FactorTag::YFun, "expected a Y factor");
        int B = c.factors[fi].deriv;
        need(B >= 2, "Y factor needs at least two derivative indices");
        int a = id == "UN_Y" ? detail::param_int(rule, "a", 0) : 0;
        Graph g = g0;
        GNode star{Factor::curv_sstar(B - 2 + a), {}};
        for (int t = 0; t < a; ++t) {
            Factor grad = parse_gradient(
                detail::param_str(rule, "cut" + std::to_string(t + 1), "phip:1"));
            int e = g.fresh_edge();
            g.nodes.push_back({grad, {e}});
            star.att.push_back(e);
        }
        for (int s = 0; s < B - 2; ++s) star.att.push_back(g.nodes[fi].att[s]);
        int etilde = g.fresh_edge();
        Factor tilde =
            Factor::phi(detail::param_int(rule, "tilde", 1), PhiFlavor::Tilde);
        g.nodes.push_back({tilde, {etilde}});
        star.att.push_back(etilde);                  // i
        star.att.push_back(g.nodes[fi].att[B - 2]);  // j
        int ek = g.fresh_edge();
        g.nodes.push_back({parse_gradient(detail::param_str(rule, "k", "ups")), {ek}});
        star.att.push_back(ek);                      // k
        star.att.push_back(g.nodes[fi].att[B - 1]);  // l
        drop_nodes(g, {fi});
        g.nodes.push_back(std::move(star));
        return LinComb::single(Rational(1), from_graph(g));
    }

    if (id == "CUT_SYM") {
        int fi = rule.site >= 0 ? rule.site : detail::auto_site(c, FactorTag::CurvGeneric);
        need(fi >= 0 && c.factors[fi].tag == FactorTag::CurvGeneric,
             "expected a generic curvature factor");
        Graph g = g0;
        int m = g.nodes[fi].f.deriv;
        int a = detail::param_int(rule, "a", -1);
        int cut = 0;
        std::vector<int> dead;
        for (int s = 0; s < m && (a < 0 || cut < a); ++s) {
            int gn = gradient_on(g, fi, s);
            if (gn < 0 || g.nodes[gn].f.tag != FactorTag::Phi) break;
            rule.params["cut" + std::to_string(cut + 1)] = describe_gradient(g.nodes[gn].f);
            dead.push_back(gn);
            ++cut;
        }
        need(a < 0 || cut == a, "fewer phi-saturated leading slots than requested");
        need(cut >= 1, "no phi-saturated leading derivative slot");
        rule.params["a"] = std::to_string(cut);
        int ti = gradient_on(g, fi, m); // the i slot partner
        need(ti >= 0 && g.nodes[ti].f.tag == FactorTag::Phi,
             "i slot must carry a phi gradient");
        if (g.nodes[ti].f.flavor == PhiFlavor::Plain) {
            g.nodes[ti].f.flavor = PhiFlavor::Tilde;
            rule.params["retyped"] = "1";
        }
        GNode star{Factor::curv_sstar(m - cut), {}};
        for (int s = cut; s < m + 4; ++s) star.att.push_back(g.nodes[fi].att[s]);
        dead.push_back(fi);
        drop_nodes(g, dead);
        g.nodes.push_back(std::move(star));
        return LinComb::single(Rational(1), from_graph(g));
    }

    if (id == "ADD_BACK") {
        int fi = rule.site >= 0 ? rule.site : detail::auto_site(c, FactorTag::CurvSstar);
        need(fi >= 0 && c.factors[fi].tag == FactorTag::CurvSstar, "expected an S* factor");
        Graph g = g0;
        int nu = g.nodes[fi].f.deriv;
        int a = detail::param_int(rule, "a", 0);
        need(a >= 1, "descriptor with a >= 1 required");
        GNode gen{Factor::curv_generic(nu + a), {}};
        for (int t = 0; t < a; ++t) {
            Factor grad = parse_gradient(
                detail::param_str(rule, "cut" + std::to_string(t + 1), "phi:1"));
            int e = g.fresh_edge();
            g.nodes.push_back({grad, {e}});
            gen.att.push_back(e);
        }
        for (int s = 0; s < nu + 4; ++s) gen.att.push_back(g.nodes[fi].att[s]);
        if (detail::param_str(rule, "retyped", "") == "1") {
            int ti = gradient_on(g, fi, nu);
            need(ti >= 0, "i slot must carry a gradient");
            g.nodes[ti].f.flavor = PhiFlavor::Plain;
        }
        drop_nodes(g, {fi});
        g.nodes.push_back(std::move(gen));
        return LinComb::single(Rational(1), from_graph(g));
    }

    if (id == "REPL_OMEGA") {
        int fi = rule.site >= 0 ? rule.site : detail::auto_site(c, FactorTag::CurvSstar);
        need(fi >= 0 && c.factors[fi].tag == FactorTag::CurvSstar, "expected an S* factor");
        int nu = c.factors[fi].deriv;
        Graph g = g0;
        int ti = gradient_on(g, fi, nu);
        need(ti >= 0 && g.nodes[ti].f.flavor == PhiFlavor::Tilde,
             "i slot must carry a tilde phi");
        // tau = leading run of upsilon / phi'-saturated derivative slots.
        int tau = 0;
        std::vector<int> dead{fi, ti};
        for (int s = 0; s < nu; ++s) {
            int gn = gradient_on(g, fi, s);
            if (gn < 0) break;
            const Factor& gf = g.nodes[gn].f;
            if (gf.tag != FactorTag::Upsilon &&
                !(gf.tag == FactorTag::Phi && gf.flavor == PhiFlavor::Primed))
                break;
            dead.push_back(gn);
            ++tau;
        }
        LinComb out;
        for (int sign = 0; sign < 2; ++sign) {
            Graph h = g;
            GNode w1{Factor::omega_fun(1, nu - tau + 2), {}};
            for (int s = tau; s < nu; ++s) w1.att.push_back(h.nodes[fi].att[s]);
            w1.att.push_back(h.nodes[fi].att[nu + 1]); // j
            int ek = h.nodes[fi].att[nu + 2], el = h.nodes[fi].att[nu + 3];
            w1.att.push_back(sign == 0 ? el : ek);
            GNode w2{Factor::omega_fun(2, 1), {sign == 0 ? ek : el}};
            drop_nodes(h, dead);
            h.nodes.push_back(std::move(w1));
            h.nodes.push_back(std::move(w2));
            out.terms.push_back({Rational(sign == 0 ? 1 : -1), from_graph(h)});
        }
        return out;
    }

    if (id == "OP_STAR") {
        int fi = rule.site, fj = rule.site2;
        if (fi < 0)
            for (size_t n = 0; n < c.factors.size(); ++n)
                if (c.factors[n].tag == FactorTag::OmegaFun && c.factors[n].deriv >= 1 &&
                    c.factors[n].label == 1)
                    fi = static_cast<int>(n);
        if (fj < 0)
            for (size_t n = 0; n < c.factors.size(); ++n)
                if (static_cast<int>(n) != fi && c.factors[n].tag == FactorTag::OmegaFun &&
                    c.factors[n].deriv == 1)
                    fj = static_cast<int>(n);
        need(fi >= 0 && fj >= 0 && c.factors[fi].tag == FactorTag::OmegaFun &&
                 c.factors[fj].tag == FactorTag::OmegaFun && c.factors[fj].deriv == 1,
             "expected an omega pair nabla^(K) w, nabla w");
        int K = c.factors[fi].deriv;
        if (K == 1) return {};
        Graph g = g0;
        GNode ph{Factor::phi_multi(detail::param_int(rule, "label",
                                                     detail::next_plain_phi_label(c)),
                                   K + 1),
                 {}};
        ph.att.push_back(g.nodes[fj].att[0]); // the gamma index
        for (int s = 0; s < K; ++s) ph.att.push_back(g.nodes[fi].att[s]);
        drop_nodes(g, {fi, fj});
        g.nodes.push_back(std::move(ph));
        return LinComb::single(Rational(K - 1), from_graph(g));
    }

    if (id == "OMEGA_TRIPLE" || id == "OMEGA_TRIPLE_D") {
        int want_nu = id == "OMEGA_TRIPLE" ? 0 : 1;
        int fi = rule.site >= 0 ? rule.site
                                : detail::auto_site(c, FactorTag::CurvSstar, want_nu);
        need(fi >= 0 && c.factors[fi].tag == FactorTag::CurvSstar &&
                 c.factors[fi].deriv == want_nu,
             "expected an S* factor of the right order");
        Graph g = g0;
        int nu = want_nu;
        int ti = gradient_on(g, fi, nu);
        need(ti >= 0 && g.nodes[ti].f.flavor == PhiFlavor::Tilde,
             "i slot must carry a tilde phi");
        LinComb out;
        for (int sign = 0; sign < 2; ++sign) {
            Graph h = g;
            int ej = h.nodes[fi].att[nu + 1];
            int ek = h.nodes[fi].att[nu + 2];
            int el = h.nodes[fi].att[nu + 3];
            if (sign == 1) std::swap(ek, el);
            if (nu == 1) h.nodes.push_back({Factor::omega_fun(1, 1), {h.nodes[fi].att[0]}});
            h.nodes.push_back({Factor::omega_fun(1, 1), {ej}});
            h.nodes.push_back({Factor::omega_fun(1, 1), {ek}});
            h.nodes.push_back({Factor::upsilon(), {el}});
            drop_nodes(h, {fi, ti});
            out.terms.push_back({Rational(sign == 0 ? 1 : -1), from_graph(h)});
        }
        return out;
    }

    if (id == "OMEGA_TRIPLE_INV") {
        // Locate the two omega gradients and the upsilon (site/site2 may
        // pin the omegas; the upsilon is unique in the admissible pattern).
        std::vector<int> omegas;
        int ups = -1;
        for (size_t n = 0; n < c.factors.size(); ++n) {
            if (c.factors[n].tag == FactorTag::OmegaFun && c.factors[n].deriv == 1)
                omegas.push_back(static_cast<int>(n));
            if (c.factors[n].tag == FactorTag::Upsilon && ups < 0)
                ups = static_cast<int>(n);
        }
        if (rule.site >= 0 && rule.site2 >= 0) omegas = {rule.site, rule.site2};
        need(omegas.size() == 2 && ups >= 0,
             "expected two omega gradients and an upsilon");
        Graph g = g0;
        GNode star{Factor::curv_sstar(0), {}};
        int etilde = g.fresh_edge();
        g.nodes.push_back(
            {Factor::phi(detail::param_int(rule, "tilde", 1), PhiFlavor::Tilde), {etilde}});
        star.att.push_back(etilde);                    // i
        star.att.push_back(g.nodes[omegas[0]].att[0]); // j
        star.att.push_back(g.nodes[omegas[1]].att[0]); // k
        star.att.push_back(g.nodes[ups].att[0]);       // l
        drop_nodes(g, {omegas[0], omegas[1], ups});
        g.nodes.push_back(std::move(star));
        return LinComb::single(Rational(1), from_graph(g));
    }

    if (id == "Y1Y2_PAIR") {
        // Two S* factors whose l slots are paired to each other.
        int fa = rule.site, fb = rule.site2;
        if (fa < 0 || fb < 0) {
            for (size_t n = 0; n < c.factors.size() && fb < 0; ++n) {
                if (c.factors[n].tag != FactorTag::CurvSstar) continue;
                IndexRef l{static_cast<int>(n), c.factors[n].deriv + 3};
                auto pt = c.partner(l);
                if (pt && c.factors[pt->factor].tag == FactorTag::CurvSstar &&
                    pt->slot == c.factors[pt->factor].deriv + 3) {
                    fa = static_cast<int>(n);
                    fb = pt->factor;
                }
            }
        }
        need(fa >= 0 && fb >= 0 && fa != fb, "expected two l-paired S* factors");
        Graph g = g0;
        std::vector<int> dead{fa, fb};
        YTag tags[2] = {YTag::Y1, YTag::Y2};
        int sites[2] = {fa, fb};
        std::vector<GNode> ys;
        for (int w = 0; w < 2; ++w) {
            int fi = sites[w];
            int nu = g.nodes[fi].f.deriv;
            int ti = gradient_on(g, fi, nu);
            need(ti >= 0 && g.nodes[ti].f.flavor == PhiFlavor::Tilde,
                 "i slot must carry a tilde phi");
            dead.push_back(ti);
            GNode y{Factor::yfun(nu + 2, tags[w]), {}};
            for (int s = 0; s < nu; ++s) y.att.push_back(g.nodes[fi].att[s]);
            y.att.push_back(g.nodes[fi].att[nu + 1]); // j
            y.att.push_back(g.nodes[fi].att[nu + 2]); // k
            ys.push_back(std::move(y));
        }
        drop_nodes(g, dead);
        for (auto& y : ys) g.nodes.push_back(std::move(y));
        return LinComb::single(Rational(1), from_graph(g));
    }

    throw std::invalid_argument("unknown rule id: " + id);
}

} // namespace contracta
