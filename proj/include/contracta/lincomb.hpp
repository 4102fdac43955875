/**
 * @brief Formal rational-coefficient linear combinations of contractions.
 */
#pragma once

#include <map>
#include <vector>

#include "canonical.hpp"
#include "rational.hpp"

namespace contracta {

struct Term {
    Rational coeff;
    Contraction c;
    friend bool operator==(const Term&, const Term&) = default;
};

struct LinComb {
    std::vector<Term> terms;

    LinComb() = default;
    explicit LinComb(std::vector<Term> t) : terms(std::move(t)) {}
    static LinComb single(Rational a, Contraction c) {
        LinComb lc;
        lc.terms.push_back({std::move(a), std::move(c)});
        return lc;
    }

    bool empty() const { return terms.empty(); }

    LinComb& operator+=(const LinComb& o) {
        terms.insert(terms.end(), o.terms.begin(), o.terms.end());
        return *this;
    }
    LinComb& operator*=(const Rational& a) {
        for (auto& t : terms) t.coeff *= a;
        return *this;
    }
    friend LinComb operator+(LinComb a, const LinComb& b) { return a += b; }
    friend LinComb operator-(LinComb a, LinComb b) {
        b *= Rational(-1);
        return a += b;
    }
    friend LinComb operator*(const Rational& a, LinComb lc) { return lc *= a; }

    /// Canonicalize every term, merge structurally identical canonical
    /// terms, and drop zero coefficients. Deterministic term order.
    LinComb normalized() const {
        std::map<std::vector<int>, std::pair<Rational, Contraction>> acc;
        for (const auto& t : terms) {
            Contraction cc = canonicalize(t.c);
            auto key = cc.encoded();
            auto it = acc.find(key);
            if (it == acc.end()) acc.emplace(std::move(key), std::make_pair(t.coeff, std::move(cc)));
            else it->second.first += t.coeff;
        }
        LinComb out;
        for (auto& [k, v] : acc)
            if (v.first != 0) out.terms.push_back({std::move(v.first), std::move(v.second)});
        return out;
    }

    friend bool operator==(const LinComb&, const LinComb&) = default;
};

} // namespace contracta
