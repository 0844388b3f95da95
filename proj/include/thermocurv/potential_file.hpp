#pragma once

// JSON potential-definition documents:
//
//   {"name": str, "coords": [str, str], "expression": str,
//    "params": {str: number}, "domain": {str: [lo, hi]},
//    "reference": {"RM": str, "RF": str}}
//
// lo/hi may be null for an unbounded end. "params", "domain" and
// "reference" are optional; "reference" holds closed-form curvature
// expressions in the same coordinates, used by the check command.

#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "thermocurv/expression.hpp"

namespace thermocurv {

struct PotentialDocument {
    PotentialSpec spec;
    std::optional<std::string> reference_rm;
    std::optional<std::string> reference_rf;
};

namespace detail {

[[noreturn]] inline void schema_error(const std::string& message) {
    throw ParseError(ParseErrorKind::schema, 0, message);
}

inline double bound_from_json(const nlohmann::json& j, double unbounded, const std::string& where) {
    if (j.is_null()) return unbounded;
    if (!j.is_number()) schema_error(where + " must be a number or null");
    return j.get<double>();
}

}  // namespace detail

inline PotentialDocument potential_from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // nlohmann reports the 1-based byte index of the failing character.
        const std::size_t pos = e.byte > 0 ? e.byte - 1 : 0;
        throw ParseError(ParseErrorKind::lexical, pos, std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) detail::schema_error("potential document must be a JSON object");

    if (!doc.contains("expression") || !doc["expression"].is_string())
        detail::schema_error("\"expression\" must be a string");
    if (!doc.contains("coords") || !doc["coords"].is_array() || doc["coords"].size() != 2 ||
        !doc["coords"][0].is_string() || !doc["coords"][1].is_string())
        detail::schema_error("\"coords\" must be an array of two strings");

    std::string name;
    if (doc.contains("name")) {
        if (!doc["name"].is_string()) detail::schema_error("\"name\" must be a string");
        name = doc["name"].get<std::string>();
    }
    const std::array<std::string, 2> coords{doc["coords"][0].get<std::string>(), doc["coords"][1].get<std::string>()};

    std::map<std::string, double> params;
    if (doc.contains("params")) {
        if (!doc["params"].is_object()) detail::schema_error("\"params\" must be an object");
        for (const auto& [key, value] : doc["params"].items()) {
            if (!value.is_number()) detail::schema_error("parameter \"" + key + "\" must be a number");
            params[key] = value.get<double>();
        }
    }

    std::array<Interval, 2> domain{};
    if (doc.contains("domain")) {
        if (!doc["domain"].is_object()) detail::schema_error("\"domain\" must be an object");
        for (const auto& [key, value] : doc["domain"].items()) {
            std::size_t axis;
            if (key == coords[0]) axis = 0;
            else if (key == coords[1]) axis = 1;
            else detail::schema_error("domain given for unknown coordinate \"" + key + "\"");
            if (!value.is_array() || value.size() != 2) detail::schema_error("domain of \"" + key + "\" must be [lo, hi]");
            constexpr double inf = std::numeric_limits<double>::infinity();
            domain[axis] = Interval{detail::bound_from_json(value[0], -inf, "domain lower bound of " + key),
                                    detail::bound_from_json(value[1], inf, "domain upper bound of " + key)};
        }
    }

    PotentialDocument result{parse_potential(doc["expression"].get<std::string>(), coords, params, name, domain),
                             std::nullopt, std::nullopt};

    if (doc.contains("reference")) {
        const auto& ref = doc["reference"];
        if (!ref.is_object()) detail::schema_error("\"reference\" must be an object");
        for (const char* key : {"RM", "RF"}) {
            if (!ref.contains(key)) continue;
            if (!ref[key].is_string()) detail::schema_error(std::string("reference \"") + key + "\" must be a string");
            auto src = ref[key].get<std::string>();
            parse_expression(src, coords, params);  // validate eagerly
            (std::string_view(key) == "RM" ? result.reference_rm : result.reference_rf) = std::move(src);
        }
    }
    return result;
}

inline nlohmann::json potential_to_json(const PotentialSpec& spec, const std::optional<std::string>& reference_rm = {},
                                        const std::optional<std::string>& reference_rf = {}) {
    nlohmann::json j;
    j["name"] = spec.name();
    j["coords"] = {spec.coords()[0], spec.coords()[1]};
    j["expression"] = spec.expression();
    j["params"] = nlohmann::json::object();
    for (const auto& [key, value] : spec.params()) j["params"][key] = value;
    j["domain"] = nlohmann::json::object();
    for (std::size_t i = 0; i < 2; ++i) {
        const Interval& iv = spec.domain()[i];
        nlohmann::json lo = std::isfinite(iv.lo) ? nlohmann::json(iv.lo) : nlohmann::json(nullptr);
        nlohmann::json hi = std::isfinite(iv.hi) ? nlohmann::json(iv.hi) : nlohmann::json(nullptr);
        j["domain"][spec.coords()[i]] = {lo, hi};
    }
    if (reference_rm || reference_rf) {
        j["reference"] = nlohmann::json::object();
        if (reference_rm) j["reference"]["RM"] = *reference_rm;
        if (reference_rf) j["reference"]["RF"] = *reference_rf;
    }
    return j;
}

}  // namespace thermocurv
