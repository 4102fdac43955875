/**
 * @brief Factor taxonomy for partial contractions.
 *
 * A factor is one tensor block of a partial contraction: a curvature
 * tensor with an iterated derivative block, a scalar function with a
 * derivative block, a gradient factor, or one of the auxiliary blocks
 * (Y functions, the antisymmetric omega pair).
 *
 * Slots are addressed by a dense index 0..arity-1; slot_name maps them
 * to the conventional names (r1..rm, i, j, k, l, d1..dB, a, b).
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <tuple>

namespace contracta {

enum class FactorTag : std::uint8_t {
    CurvGeneric, ///< nabla^(m) R_{ijkl}
    CurvSstar,   ///< S_* nabla^(nu) R_{ijkl}, symmetrized over {r1..rnu, j}
    Omega,       ///< nabla^(b) Omega_h
    Phi,         ///< nabla^(b) phi_h (plain / primed / tilde), b = 1 by default
    Upsilon,     ///< nabla upsilon
    YFun,        ///< nabla^(B) Y (or Y1 / Y2)
    OmegaAnti,   ///< nabla^(B,+) (nabla_a w1 nabla_b w2 - nabla_b w1 nabla_a w2)
    OmegaFun     ///< nabla^(B) w1 or nabla^(B) w2 (standalone omega scalar)
};

enum class PhiFlavor : std::uint8_t { Plain, Primed, Tilde };
enum class YTag : std::uint8_t { Y, Y1, Y2 };

struct Factor {
    FactorTag tag{FactorTag::CurvGeneric};
    int deriv = 0;                      ///< m / nu / b / B (0 for Phi, Upsilon)
    int label = 0;                      ///< h for Omega/Phi; unused otherwise
    PhiFlavor flavor = PhiFlavor::Plain;
    YTag ytag = YTag::Y;

    static Factor curv_generic(int m) { return {FactorTag::CurvGeneric, m, 0, PhiFlavor::Plain, YTag::Y}; }
    static Factor curv_sstar(int nu) { return {FactorTag::CurvSstar, nu, 0, PhiFlavor::Plain, YTag::Y}; }
    static Factor omega(int h, int b) { return {FactorTag::Omega, b, h, PhiFlavor::Plain, YTag::Y}; }
    static Factor phi(int h, PhiFlavor f = PhiFlavor::Plain) { return {FactorTag::Phi, 1, h, f, YTag::Y}; }
    /// Multi-derivative phi block nabla^(b) phi_h (appears only as a rule output).
    static Factor phi_multi(int h, int b) { return {FactorTag::Phi, b, h, PhiFlavor::Plain, YTag::Y}; }
    static Factor upsilon() { return {FactorTag::Upsilon, 0, 0, PhiFlavor::Plain, YTag::Y}; }
    static Factor yfun(int B, YTag t = YTag::Y) { return {FactorTag::YFun, B, 0, PhiFlavor::Plain, t}; }
    static Factor omega_anti(int B) { return {FactorTag::OmegaAnti, B, 0, PhiFlavor::Plain, YTag::Y}; }
    /// Standalone omega scalar nabla^(B) w_which, which in {1, 2}.
    static Factor omega_fun(int which, int B) { return {FactorTag::OmegaFun, B, which, PhiFlavor::Plain, YTag::Y}; }

    /// Total number of index slots carried by this factor.
    int arity() const {
        switch (tag) {
            case FactorTag::CurvGeneric:
            case FactorTag::CurvSstar: return deriv + 4;
            case FactorTag::Omega:
            case FactorTag::YFun:
            case FactorTag::OmegaFun: return deriv;
            case FactorTag::Phi: return deriv > 1 ? deriv : 1;
            case FactorTag::Upsilon: return 1;
            case FactorTag::OmegaAnti: return deriv + 2;
        }
        return 0;
    }

    /// True for the curvature kinds (the factors counted by sigma1/sigma2).
    bool is_curvature() const {
        return tag == FactorTag::CurvGeneric || tag == FactorTag::CurvSstar;
    }

    /// True for gradient factors that can never receive further derivatives.
    bool is_gradient() const {
        return (tag == FactorTag::Phi && deriv <= 1) || tag == FactorTag::Upsilon;
    }

    /// Number of leading slots forming the symmetric derivative block.
    int deriv_block() const {
        switch (tag) {
            case FactorTag::CurvGeneric:
            case FactorTag::CurvSstar: return deriv;
            case FactorTag::Omega:
            case FactorTag::YFun:
            case FactorTag::OmegaFun:
            case FactorTag::OmegaAnti: return deriv;
            case FactorTag::Phi: return deriv > 1 ? deriv : 0;
            default: return 0;
        }
    }

    bool is_deriv_slot(int s) const { return s < deriv_block(); }

    /// Internal (non-derivative) curvature slot? Only meaningful for curvature kinds.
    bool is_internal_slot(int s) const {
        return is_curvature() && s >= deriv && s < deriv + 4;
    }

    /// Named slot within a curvature factor: 0..m-1 -> r, m..m+3 -> i,j,k,l.
    std::string slot_name(int s) const {
        switch (tag) {
            case FactorTag::CurvGeneric:
            case FactorTag::CurvSstar: {
                if (s < deriv) return "r" + std::to_string(s + 1);
                static const char* names[4] = {"i", "j", "k", "l"};
                return names[s - deriv];
            }
            case FactorTag::Omega:
            case FactorTag::YFun:
            case FactorTag::OmegaFun: return "d" + std::to_string(s + 1);
            case FactorTag::Phi:
                if (deriv > 1) return "d" + std::to_string(s + 1);
                return "a";
            case FactorTag::Upsilon: return "a";
            case FactorTag::OmegaAnti:
                if (s < deriv) return "d" + std::to_string(s + 1);
                return s == deriv ? "a" : "b";
        }
        return "?";
    }

    /// Inverse of slot_name; returns -1 for an unknown name.
    int slot_from_name(const std::string& n) const {
        for (int s = 0; s < arity(); ++s)
            if (slot_name(s) == n) return s;
        return -1;
    }

    friend bool operator==(const Factor&, const Factor&) = default;

    /// Deterministic sort key used by canonicalize (kind, labels, arity).
    friend auto key_of(const Factor& f) {
        return std::tuple(static_cast<int>(f.tag), f.label,
                          static_cast<int>(f.flavor), static_cast<int>(f.ytag),
                          f.deriv);
    }
    friend bool factor_key_less(const Factor& a, const Factor& b) {
        return key_of(a) < key_of(b);
    }
};

} // namespace contracta
