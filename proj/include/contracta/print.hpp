/**
 * @brief Printer for the contraction language. parse(print(lc)) equals
 * canonicalize-normalization of lc (structural round trip).
 */
#pragma once

#include <sstream>
#include <string>

#include "lincomb.hpp"

namespace contracta {

inline std::string print_factor(const Factor& f) {
    std::ostringstream os;
    switch (f.tag) {
        case FactorTag::CurvGeneric: os << "CR[m=" << f.deriv << "]"; break;
        case FactorTag::CurvSstar: os << "SR[v=" << f.deriv << "]"; break;
        case FactorTag::Omega: os << "Om[h=" << f.label << ",b=" << f.deriv << "]"; break;
        case FactorTag::Phi:
            os << (f.flavor == PhiFlavor::Plain ? "ph"
                   : f.flavor == PhiFlavor::Primed ? "ph'" : "ph~")
               << "[" << f.label;
            if (f.deriv > 1) os << ",b=" << f.deriv;
            os << "]";
            break;
        case FactorTag::Upsilon: os << "up"; break;
        case FactorTag::YFun:
            os << (f.ytag == YTag::Y ? "Y" : f.ytag == YTag::Y1 ? "Y1" : "Y2")
               << "[B=" << f.deriv << "]";
            break;
        case FactorTag::OmegaAnti: os << "OmA[B=" << f.deriv << "]"; break;
        case FactorTag::OmegaFun: os << "w" << f.label << "[B=" << f.deriv << "]"; break;
    }
    return os.str();
}

inline std::string print_indexref(const Contraction& c, IndexRef r) {
    return "f" + std::to_string(r.factor + 1) + "." + c.factors[r.factor].slot_name(r.slot);
}

inline std::string print(const Contraction& c) {
    std::ostringstream os;
    os << "contr(";
    for (size_t i = 0; i < c.factors.size(); ++i) {
        if (i) os << ", ";
        os << print_factor(c.factors[i]);
    }
    os << "; ";
    for (size_t i = 0; i < c.pairs.size(); ++i) {
        if (i) os << ", ";
        os << print_indexref(c, c.pairs[i].a) << "-" << print_indexref(c, c.pairs[i].b);
    }
    os << "; ";
    for (size_t i = 0; i < c.free.size(); ++i) {
        if (i) os << ", ";
        os << print_indexref(c, c.free[i]);
    }
    os << ")";
    return os.str();
}

inline std::string print(const LinComb& lc) {
    if (lc.terms.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& t : lc.terms) {
        Rational a = t.coeff;
        bool neg = a < 0;
        if (neg) a = -a;
        if (first) {
            if (neg) os << "-";
            first = false;
        } else {
            os << (neg ? " - " : " + ");
        }
        if (a != 1) os << to_string(a) << " * ";
        os << print(t.c);
    }
    return os.str();
}

} // namespace contracta
