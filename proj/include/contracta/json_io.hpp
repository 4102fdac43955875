/**
 * @brief Stable JSON serialization (schema 1) for characters and verdict
 * reports: level tags, factor lists, marks rendered as "none"/"*"/"**".
 * Consumed by the batch CLI's `character`, `compare`, and `verify` verbs.
 */
#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "character.hpp"
#include "evaluate.hpp"

namespace contracta {

inline std::string mark_str(Mark m) {
    switch (m) {
        case Mark::None: return "none";
        case Mark::Star: return "*";
        default: return "**";
    }
}

inline std::string order_str(Order o) {
    switch (o) {
        case Order::Precedent: return "precedent";
        case Order::Equipolent: return "equipolent";
        default: return "subsequent";
    }
}

inline nlohmann::json to_json(const WeakChar& w) {
    nlohmann::json j;
    j["schema"] = 1;
    j["level"] = "weak";
    j["omega_sets"] = nlohmann::json::array();
    for (const auto& [h, s] : w.omega_sets) j["omega_sets"].push_back({{"h", h}, {"phis", s}});
    j["curv_sets"] = w.curv_sets;
    return j;
}

inline nlohmann::json to_json(const SimpleChar& k) {
    nlohmann::json j;
    j["schema"] = 1;
    j["level"] = "simple";
    j["L1"] = nlohmann::json::array();
    for (const auto& [h, s] : k.L1) j["L1"].push_back({{"h", h}, {"phis", s}});
    j["L2"] = k.L2;
    j["L3"] = nlohmann::json::array();
    for (const auto& [a, s] : k.L3) j["L3"].push_back({{"tilde", a}, {"primed", s}});
    return j;
}

inline nlohmann::json to_json(const RefinedDoubleChar& r, bool refined) {
    nlohmann::json j;
    j["schema"] = 1;
    j["level"] = refined ? "refined" : "double";
    j["H1"] = nlohmann::json::array();
    for (const auto& [h, s, nf] : r.H1)
        j["H1"].push_back({{"h", h}, {"phis", s}, {"frees", nf}});
    j["H2"] = nlohmann::json::array();
    for (const auto& [s, nf, m] : r.H2)
        j["H2"].push_back({{"phis", s}, {"frees", nf}, {"mark", mark_str(m)}});
    j["H3"] = nlohmann::json::array();
    for (const auto& [a, s, nf, m] : r.H3)
        j["H3"].push_back({{"tilde", a}, {"primed", s}, {"frees", nf}, {"mark", mark_str(m)}});
    return j;
}

inline nlohmann::json character_json(const Contraction& c, Level level) {
    switch (level) {
        case Level::Weak: return to_json(weak_character(c));
        case Level::Simple: return to_json(simple_character(c));
        case Level::Double: return to_json(refined_double_character(c, -1, false), false);
        default: return to_json(refined_double_character(c), true);
    }
}

/// One verify entry: identity pair verdict plus the sampling parameters.
inline nlohmann::json verdict_json(const Verdict& v, int dims, int trials,
                                   std::uint64_t seed, const std::string& max_coeff) {
    nlohmann::json j;
    j["schema"] = 1;
    j["verdict"] = v.pass ? "PASS" : "FAIL";
    j["dims"] = dims;
    j["trials"] = trials;
    j["seed"] = seed;
    j["max_coeff_bits"] = max_coeff;
    if (!v.pass) {
        j["witness_dim"] = v.witness_dim;
        j["witness_seed"] = v.witness_seed;
        j["residual"] = v.residual.str();
    }
    return j;
}

} // namespace contracta
