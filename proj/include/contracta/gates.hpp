/**
 * @brief Hypothesis gates: machine-checkable admission conditions for the
 * main inductive reduction steps. Each gate takes the full list of
 * candidate fields plus the relevant numeric parameters and reports either
 * admission or the list of violated clauses.
 */
#pragma once

#include <string>
#include <vector>

#include "acceptable.hpp"
#include "context.hpp"

namespace contracta {

enum class GateId {
    PeterMichel,  ///< distinguished fully phi-saturated Omega factor, sigma >= 4
    PeterMichel3, ///< same at sigma == 3, removability required
    Obote,        ///< Y-regime descent, no bad bottom-rank field
    Vanderbi,     ///< omega-pair regime descent, sigma >= 4
    Vanderbi3,    ///< omega-pair regime at sigma == 3
    Addition,     ///< one extra phi gradient, two admissible layouts
    AdditionGen,  ///< beta >= 3 extra phi gradients
    Appendix      ///< forbidden maximal fields, rank-mu spread-out frees
};

inline std::string to_string(GateId g) {
    switch (g) {
        case GateId::PeterMichel: return "petermichel";
        case GateId::PeterMichel3: return "petermichel3";
        case GateId::Obote: return "obote";
        case GateId::Vanderbi: return "vanderbi";
        case GateId::Vanderbi3: return "vanderbi3";
        case GateId::Addition: return "addition";
        case GateId::AdditionGen: return "additiongen";
        case GateId::Appendix: return "appendix";
    }
    return "?";
}

struct GateParams {
    int alpha = 0; ///< bottom rank for the descent gates
    int u = 0;     ///< number of base phi gradients for the addition gates
    int mu = 0;    ///< base rank
    int beta = 0;  ///< number of extra phi gradients (additiongen)
};

struct GateReport {
    bool ok = true;
    std::vector<std::string> violations;
    void fail(std::string why) {
        ok = false;
        violations.push_back(std::move(why));
    }
    explicit operator bool() const { return ok; }
};

namespace detail {

/// The distinguished Omega factor of the petermichel gates: a
/// differentiated Omega all of whose indices land on phi gradients.
/// Returns its position or -1.
inline int distinguished_omega(const Contraction& c, int label) {
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        const Factor& f = c.factors[fi];
        if (f.tag != FactorTag::Omega || f.label != label || f.deriv < 1) continue;
        bool all = true;
        for (int s = 0; s < f.deriv; ++s)
            if (!contracts_phi(c, static_cast<int>(fi), s)) all = false;
        if (all) return static_cast<int>(fi);
    }
    return -1;
}

inline void petermichel_core(const std::vector<Contraction>& fields, GateReport& rep) {
    if (fields.empty()) {
        rep.fail("no fields");
        return;
    }
    int beta = static_cast<int>(fields.front().free.size());
    SimpleChar kappa = simple_character(fields.front());
    // The distinguished Omega label: take it from the first field (the
    // Omega whose derivative indices are all phi-saturated).
    int label = 0;
    for (size_t fi = 0; fi < fields.front().factors.size(); ++fi)
        if (fields.front().factors[fi].tag == FactorTag::Omega &&
            distinguished_omega(fields.front(), fields.front().factors[fi].label) ==
                static_cast<int>(fi))
            label = fields.front().factors[fi].label;
    if (label == 0) {
        rep.fail("no distinguished fully phi-saturated Omega factor found");
        return;
    }
    for (size_t i = 0; i < fields.size(); ++i) {
        const Contraction& c = fields[i];
        std::string tag = "field " + std::to_string(i + 1) + ": ";
        if (static_cast<int>(c.free.size()) != beta) rep.fail(tag + "rank differs");
        if (!(simple_character(c) == kappa)) rep.fail(tag + "simple character differs");
        int di = distinguished_omega(c, label);
        if (di < 0) {
            rep.fail(tag + "missing distinguished Omega_" + std::to_string(label));
            continue;
        }
        int y = c.factors[di].deriv;
        if (y >= 2) {
            if (!validate_acceptable(c)) rep.fail(tag + "not acceptable");
        } else {
            // With y == 1 the distinguished factor itself is the only
            // admissible acceptability defect: erasing it (with its phi
            // gradient) must restore acceptability.
            if (!validate_acceptable(compact_phi_labels(erase_factor(c, di))))
                rep.fail(tag + "defect not confined to the distinguished factor");
        }
        if (is_forbidden(erase_factor(c, di)))
            rep.fail(tag + "erasing the distinguished factor leaves a forbidden field");
    }
}

} // namespace detail

/// Check the admission conditions of gate g over the candidate fields.
inline GateReport hypothesis_gate(GateId g, const std::vector<Contraction>& fields,
                                  const GateParams& p = {}) {
    GateReport rep;
    if (fields.empty()) {
        rep.fail("no fields");
        return rep;
    }
    auto sigma_of = [](const Contraction& c) { return c.stats().sigma; };

    switch (g) {
        case GateId::PeterMichel:
            for (size_t i = 0; i < fields.size(); ++i)
                if (sigma_of(fields[i]) < 4)
                    rep.fail("field " + std::to_string(i + 1) + ": sigma < 4");
            detail::petermichel_core(fields, rep);
            break;

        case GateId::PeterMichel3:
            for (size_t i = 0; i < fields.size(); ++i) {
                if (sigma_of(fields[i]) != 3)
                    rep.fail("field " + std::to_string(i + 1) + ": sigma != 3");
                if (removable_indices(fields[i]).empty())
                    rep.fail("field " + std::to_string(i + 1) + ": no removable index");
            }
            detail::petermichel_core(fields, rep);
            break;

        case GateId::Obote:
            for (size_t i = 0; i < fields.size(); ++i) {
                const Contraction& c = fields[i];
                std::string tag = "field " + std::to_string(i + 1) + ": ";
                if (sigma_of(c) < 4) rep.fail(tag + "sigma < 4");
                int rank = static_cast<int>(c.free.size());
                if (rank < p.alpha) rep.fail(tag + "rank below alpha");
                if (rank == p.alpha && is_bad(c, Regime::Standard))
                    rep.fail(tag + "bad bottom-rank field");
            }
            break;

        case GateId::Vanderbi:
        case GateId::Vanderbi3:
            for (size_t i = 0; i < fields.size(); ++i) {
                const Contraction& c = fields[i];
                std::string tag = "field " + std::to_string(i + 1) + ": ";
                bool has_pair = false;
                for (const auto& f : c.factors)
                    if (f.tag == FactorTag::OmegaAnti) has_pair = true;
                if (!has_pair) rep.fail(tag + "no antisymmetric omega pair");
                int rank = static_cast<int>(c.free.size());
                if (rank < p.alpha) rep.fail(tag + "rank below alpha");
                if (g == GateId::Vanderbi) {
                    if (sigma_of(c) < 4) rep.fail(tag + "sigma < 4");
                } else {
                    if (sigma_of(c) != 3) rep.fail(tag + "sigma != 3");
                    // Every real factor must carry a removable index.
                    RemovableSet rem = removable_indices(c, Regime::OmegaPair);
                    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
                        const Factor& f = c.factors[fi];
                        if (!f.is_curvature() && f.tag != FactorTag::Omega) continue;
                        bool found = false;
                        for (const auto& r : rem.deriv_slots)
                            if (r.factor == static_cast<int>(fi)) found = true;
                        if (!found)
                            rep.fail(tag + "factor f" + std::to_string(fi + 1) +
                                     " has no removable index");
                    }
                }
                if (rank == p.alpha && is_bad(c, Regime::OmegaPair))
                    rep.fail(tag + "bad bottom-rank field");
            }
            break;

        case GateId::Addition:
        case GateId::AdditionGen: {
            SimpleChar kappa; // u-simple character: only labels <= u retained
            bool have_kappa = false;
            auto trim = [&](SimpleChar k) {
                auto strip = [&](std::set<int>& s) {
                    std::erase_if(s, [&](int h) { return h > p.u; });
                };
                for (auto& [h, s] : k.L1) strip(s);
                for (auto& s : k.L2) strip(s);
                for (auto& [a, s] : k.L3) strip(s);
                std::sort(k.L1.begin(), k.L1.end());
                std::sort(k.L2.begin(), k.L2.end());
                std::sort(k.L3.begin(), k.L3.end());
                return k;
            };
            int min_rank = -1;
            for (const auto& c : fields) {
                int r = static_cast<int>(c.free.size());
                if (min_rank < 0 || r < min_rank) min_rank = r;
            }
            for (size_t i = 0; i < fields.size(); ++i) {
                const Contraction& c = fields[i];
                std::string tag = "field " + std::to_string(i + 1) + ": ";
                if (g == GateId::Addition && sigma_of(c) < 3) rep.fail(tag + "sigma < 3");
                // Classify the extra phi gradients' landing sites.
                int n_extra = g == GateId::Addition ? 1 : p.beta;
                if (g == GateId::AdditionGen && p.beta < 3)
                    rep.fail("beta < 3");
                bool layout1 = true, any_extra = false, layout_ok = true;
                for (size_t gi = 0; gi < c.factors.size(); ++gi) {
                    const Factor& f = c.factors[gi];
                    if (f.tag != FactorTag::Phi || f.deriv > 1 || f.label <= p.u ||
                        f.label > p.u + n_extra)
                        continue;
                    any_extra = true;
                    auto pt = c.partner(IndexRef{static_cast<int>(gi), 0});
                    if (!pt) {
                        layout_ok = false;
                        continue;
                    }
                    const Factor& host = c.factors[pt->factor];
                    bool on_block =
                        (host.tag == FactorTag::CurvGeneric && pt->slot < host.deriv) ||
                        (host.tag == FactorTag::CurvSstar &&
                         (pt->slot < host.deriv || pt->slot == host.deriv + 1));
                    bool on_internal =
                        (host.tag == FactorTag::CurvGeneric && host.is_internal_slot(pt->slot)) ||
                        (host.tag == FactorTag::CurvSstar &&
                         (pt->slot == host.deriv + 2 || pt->slot == host.deriv + 3));
                    if (on_block) continue;           // layout 1 site
                    if (on_internal) layout1 = false; // layout 2 site
                    else layout_ok = false;
                }
                if (!any_extra) rep.fail(tag + "missing the extra phi gradient(s)");
                if (!layout_ok) rep.fail(tag + "extra phi gradient on an inadmissible site");
                SimpleChar k = trim(simple_character(c));
                if (!have_kappa) {
                    kappa = k;
                    have_kappa = true;
                } else if (!(k == kappa)) {
                    rep.fail(tag + "base simple character differs");
                }
                int rank = static_cast<int>(c.free.size());
                if (g == GateId::Addition) {
                    if (rank == min_rank && is_forbidden(c))
                        rep.fail(tag + "forbidden minimum-rank field");
                } else {
                    if (layout1 && rank != p.mu + p.beta)
                        rep.fail(tag + "layout-1 field must have rank mu + beta");
                    if (!layout1 && rank <= p.mu + p.beta)
                        rep.fail(tag + "layout-2 field must have rank above mu + beta");
                }
            }
            break;
        }

        case GateId::Appendix: {
            bool any_forbidden_max = false;
            for (size_t i = 0; i < fields.size(); ++i) {
                const Contraction& c = fields[i];
                std::string tag = "field " + std::to_string(i + 1) + ": ";
                if (static_cast<int>(c.free.size()) != p.mu)
                    rep.fail(tag + "rank != mu");
                std::set<int> hosts;
                for (const auto& fr : c.free)
                    if (!hosts.insert(fr.factor).second)
                        rep.fail(tag + "two free indices on one factor");
                bool has_underived_sstar = false;
                for (const auto& f : c.factors)
                    if (f.tag == FactorTag::CurvSstar && f.deriv == 0)
                        has_underived_sstar = true;
                if (!has_underived_sstar)
                    rep.fail(tag + "no underived S* factor");
                if (is_forbidden(c)) any_forbidden_max = true;
            }
            if (!any_forbidden_max)
                rep.fail("no forbidden field among the candidates");
            break;
        }
    }
    return rep;
}

} // namespace contracta
