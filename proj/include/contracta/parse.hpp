/**
 * @brief Parser for the line-oriented contraction language.
 *
 * Grammar:
 *   lincomb  := term (("+"|"-") term)* | "0"
 *   term     := [rational "*"] "contr(" factor-list ";" pair-list ";" free-list ")"
 *   factor   := "CR[m=INT]" | "SR[v=INT]" | "Om[h=INT,b=INT]" | "ph[INT]"
 *             | "ph'[INT]" | "ph~[INT]" | "up" | "Y[B=INT]" | "Y1[B=INT]"
 *             | "Y2[B=INT]" | "OmA[B=INT]"
 *   indexref := "f" INT "." slotname     (slots r1..rm, i, j, k, l, d1..dB, a, b)
 *   pair     := indexref "-" indexref
 *
 * Files hold one lincomb per stanza (blank-line separated); "#" starts a
 * comment that runs to end of line. Labels are explicit integers and are
 * never renumbered by the parser.
 */
#pragma once

#include <cctype>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lincomb.hpp"

namespace contracta {

struct ParseError : std::runtime_error {
    int line, column;
    ParseError(const std::string& msg, int l, int c)
        : std::runtime_error("parse error at " + std::to_string(l) + ":" +
                             std::to_string(c) + ": " + msg),
          line(l), column(c) {}
};

namespace detail {

class Lexer {
public:
    explicit Lexer(const std::string& text) : s_(text) {}

    void skip_ws() {
        while (pos_ < s_.size()) {
            char c = s_[pos_];
            if (c == '#') {
                while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                if (c == '\n') { ++line_; col_ = 0; }
                ++pos_; ++col_;
            } else {
                break;
            }
        }
    }
    bool eof() {
        skip_ws();
        return pos_ >= s_.size();
    }
    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }
    char get() {
        char c = peek();
        ++pos_; ++col_;
        return c;
    }
    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        get();
    }
    bool accept(char c) {
        if (peek() == c) { get(); return true; }
        return false;
    }
    /// Identifier-ish token: letters, digits, ' ~.
    std::string word() {
        skip_ws();
        size_t start = pos_;
        while (pos_ < s_.size()) {
            char c = s_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '~')
                ++pos_;
            else
                break;
        }
        if (pos_ == start) fail("expected identifier");
        col_ += static_cast<int>(pos_ - start);
        return s_.substr(start, pos_ - start);
    }
    long integer() {
        skip_ws();
        size_t start = pos_;
        if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ == start) fail("expected integer");
        col_ += static_cast<int>(pos_ - start);
        return std::stol(s_.substr(start, pos_ - start));
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, line_, col_ + 1);
    }
    int line() const { return line_; }
    int col() const { return col_ + 1; }

private:
    const std::string& s_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 0;
};

inline Factor parse_factor(Lexer& lx) {
    std::string w = lx.word();
    auto braced = [&](std::initializer_list<const char*> keys) {
        std::vector<long> vals;
        lx.expect('[');
        bool first = true;
        for (const char* k : keys) {
            if (!first) lx.expect(',');
            first = false;
            std::string got = lx.word();
            if (got != k) lx.fail(std::string("expected '") + k + "=' in factor");
            lx.expect('=');
            vals.push_back(lx.integer());
        }
        lx.expect(']');
        return vals;
    };
    if (w == "CR") { auto v = braced({"m"}); return Factor::curv_generic(static_cast<int>(v[0])); }
    if (w == "SR") { auto v = braced({"v"}); return Factor::curv_sstar(static_cast<int>(v[0])); }
    if (w == "Om") { auto v = braced({"h", "b"}); return Factor::omega(static_cast<int>(v[0]), static_cast<int>(v[1])); }
    if (w == "up") return Factor::upsilon();
    if (w == "Y") { auto v = braced({"B"}); return Factor::yfun(static_cast<int>(v[0]), YTag::Y); }
    if (w == "Y1") { auto v = braced({"B"}); return Factor::yfun(static_cast<int>(v[0]), YTag::Y1); }
    if (w == "Y2") { auto v = braced({"B"}); return Factor::yfun(static_cast<int>(v[0]), YTag::Y2); }
    if (w == "OmA") { auto v = braced({"B"}); return Factor::omega_anti(static_cast<int>(v[0])); }
    if (w == "w1") { auto v = braced({"B"}); return Factor::omega_fun(1, static_cast<int>(v[0])); }
    if (w == "w2") { auto v = braced({"B"}); return Factor::omega_fun(2, static_cast<int>(v[0])); }
    if (w == "ph" || w == "ph'" || w == "ph~") {
        PhiFlavor fl = w == "ph" ? PhiFlavor::Plain
                       : w == "ph'" ? PhiFlavor::Primed : PhiFlavor::Tilde;
        lx.expect('[');
        long h = lx.integer();
        long b = 1;
        if (lx.accept(',')) {
            std::string got = lx.word();
            if (got != "b") lx.fail("expected 'b=' in phi factor");
            lx.expect('=');
            b = lx.integer();
        }
        lx.expect(']');
        if (b > 1) {
            if (fl != PhiFlavor::Plain) lx.fail("multi-derivative phi must be plain");
            return Factor::phi_multi(static_cast<int>(h), static_cast<int>(b));
        }
        return Factor::phi(static_cast<int>(h), fl);
    }
    lx.fail("unknown factor kind '" + w + "'");
}

inline IndexRef parse_indexref(Lexer& lx, const std::vector<Factor>& factors) {
    std::string w = lx.word();
    if (w.size() < 2 || w[0] != 'f') lx.fail("expected index reference fN.slot");
    size_t t = 1;
    while (t < w.size() && std::isdigit(static_cast<unsigned char>(w[t]))) ++t;
    int fnum = std::stoi(w.substr(1, t - 1));
    if (t != w.size()) lx.fail("expected '.' after factor number");
    lx.expect('.');
    std::string slot = lx.word();
    if (fnum < 1 || fnum > static_cast<int>(factors.size()))
        lx.fail("factor f" + std::to_string(fnum) + " out of range");
    int s = factors[fnum - 1].slot_from_name(slot);
    if (s < 0)
        lx.fail("unknown slot '" + slot + "' for factor f" + std::to_string(fnum));
    return IndexRef{fnum - 1, s};
}

inline Contraction parse_contr(Lexer& lx) {
    std::string w = lx.word();
    if (w != "contr") lx.fail("expected 'contr'");
    lx.expect('(');
    Contraction c;
    if (lx.peek() != ';') {
        for (;;) {
            c.factors.push_back(parse_factor(lx));
            if (!lx.accept(',')) break;
        }
    }
    lx.expect(';');
    if (lx.peek() != ';') {
        for (;;) {
            IndexRef a = parse_indexref(lx, c.factors);
            lx.expect('-');
            IndexRef b = parse_indexref(lx, c.factors);
            c.pairs.emplace_back(a, b);
            if (!lx.accept(',')) break;
        }
    }
    lx.expect(';');
    if (lx.peek() != ')') {
        for (;;) {
            c.free.push_back(parse_indexref(lx, c.factors));
            if (!lx.accept(',')) break;
        }
    }
    lx.expect(')');
    c.sort_pairs();
    if (auto err = c.validate()) lx.fail(*err);
    return c;
}

inline Rational parse_coeff(Lexer& lx) {
    // INT [ "/" INT ], already knowing a digit is next.
    std::ostringstream os;
    os << lx.integer();
    if (lx.accept('/')) os << '/' << lx.integer();
    return parse_rational(os.str());
}

} // namespace detail

/// Parse one lincomb. Throws ParseError on syntax or semantic violations.
inline LinComb parse(const std::string& text) {
    detail::Lexer lx(text);
    LinComb lc;
    if (lx.peek() == '0') {
        lx.get();
        if (!lx.eof()) lx.fail("trailing input after '0'");
        return lc;
    }
    Rational sign(1);
    bool first = true;
    for (;;) {
        if (!first) {
            if (lx.accept('+')) sign = 1;
            else if (lx.accept('-')) sign = -1;
            else break;
        } else if (lx.accept('-')) {
            sign = -1;
        }
        first = false;
        Rational coeff(1);
        if (std::isdigit(static_cast<unsigned char>(lx.peek()))) {
            coeff = detail::parse_coeff(lx);
            lx.expect('*');
        }
        lc.terms.push_back({sign * coeff, detail::parse_contr(lx)});
        if (lx.eof()) return lc;
    }
    if (!lx.eof()) lx.fail("trailing input");
    return lc;
}

/// Split a file's text into "#"-comment-stripped, blank-line-separated stanzas.
inline std::vector<std::string> split_stanzas(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string line, cur;
    auto flush = [&] {
        if (cur.find_first_not_of(" \t\r\n") != std::string::npos) out.push_back(cur);
        cur.clear();
    };
    while (std::getline(is, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) flush();
        else cur += line + "\n";
    }
    flush();
    return out;
}

} // namespace contracta
