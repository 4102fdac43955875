/**
 * @brief Acceptability verdicts for partial contractions.
 *
 * A contraction is acceptable when its free indices and gradient factors
 * sit in the permitted positions: free indices only on curvature/Omega
 * factors, every Omega differentiated at least twice, plain phi gradients
 * on derivative indices (Form2) or anywhere on a curvature/Omega factor
 * (Form1), tilde-phi gradients exactly on S* i-slots, primed-phi gradients
 * on the symmetrized {r.., j} block of an S* factor, and the phi labels
 * forming the set {1..u}.
 */
#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "contraction.hpp"

namespace contracta {

enum class Form { Form1, Form2 };

struct AcceptVerdict {
    bool ok = true;
    std::vector<std::string> failures; ///< human-readable failing clauses

    explicit operator bool() const { return ok; }
    void fail(std::string why) {
        ok = false;
        failures.push_back(std::move(why));
    }
};

/// Evaluate the acceptability clauses on c for the requested form.
inline AcceptVerdict validate_acceptable(const Contraction& c, Form form = Form::Form2) {
    AcceptVerdict v;

    // Clause 1: free indices live on curvature or Omega factors only.
    for (const auto& fr : c.free) {
        const Factor& f = c.factors[fr.factor];
        if (!(f.is_curvature() || f.tag == FactorTag::Omega))
            v.fail("free index " + std::to_string(fr.factor + 1) + "." +
                   f.slot_name(fr.slot) + " not on a curvature/Omega factor");
    }

    // Clause 2: every Omega factor carries at least two derivatives.
    for (size_t fi = 0; fi < c.factors.size(); ++fi)
        if (c.factors[fi].tag == FactorTag::Omega && c.factors[fi].deriv < 2)
            v.fail("Omega factor f" + std::to_string(fi + 1) + " has b < 2");

    // Clauses 3-5: gradient placement, by flavor.
    for (size_t fi = 0; fi < c.factors.size(); ++fi) {
        const Factor& f = c.factors[fi];
        if (f.tag != FactorTag::Phi || f.deriv > 1) continue;
        auto pt = c.partner(IndexRef{static_cast<int>(fi), 0});
        if (!pt) {
            v.fail("phi factor f" + std::to_string(fi + 1) + " is unpaired");
            continue;
        }
        const Factor& host = c.factors[pt->factor];
        switch (f.flavor) {
            case PhiFlavor::Plain: {
                bool ok_host = host.is_curvature() || host.tag == FactorTag::Omega;
                bool ok_slot = form == Form::Form1
                                   ? ok_host
                                   : (host.tag == FactorTag::CurvGeneric && host.is_deriv_slot(pt->slot)) ||
                                     (host.tag == FactorTag::Omega);
                if (!ok_slot)
                    v.fail("plain phi_" + std::to_string(f.label) +
                           " not on a permitted slot (f" + std::to_string(pt->factor + 1) +
                           "." + host.slot_name(pt->slot) + ")");
                break;
            }
            case PhiFlavor::Tilde:
                if (!(host.tag == FactorTag::CurvSstar && pt->slot == host.deriv))
                    v.fail("tilde phi_" + std::to_string(f.label) + " not on an S* i-slot");
                break;
            case PhiFlavor::Primed:
                if (!(host.tag == FactorTag::CurvSstar &&
                      (host.is_deriv_slot(pt->slot) || pt->slot == host.deriv + 1)))
                    v.fail("primed phi_" + std::to_string(f.label) +
                           " not on an S* {r.., j} slot");
                break;
        }
    }

    // Clause 6: the phi labels form exactly {1..u}.
    std::set<int> labels;
    int u = 0;
    bool dup = false;
    for (const auto& f : c.factors)
        if (f.tag == FactorTag::Phi && f.deriv <= 1) {
            ++u;
            if (!labels.insert(f.label).second) dup = true;
        }
    if (dup)
        v.fail("duplicate phi label");
    else if (u > 0 && (*labels.begin() != 1 || *labels.rbegin() != u))
        v.fail("phi labels are not {1..u}");

    return v;
}

} // namespace contracta
