#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thermocurv/errors.hpp"
#include "thermocurv/expression.hpp"
#include "thermocurv/state.hpp"

namespace thermocurv {

/// One axis of a sampling grid.
struct GridAxis {
    double lo = 0.0;
    double hi = 1.0;
    int count = 1;
    bool log_spacing = false;

    std::vector<double> values() const {
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            const double u = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
            out.push_back(log_spacing ? std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo))) : lo + u * (hi - lo));
        }
        return out;
    }
};

using PointFunction = std::function<double(StatePoint)>;

struct CatalogEntry {
    PotentialSpec spec;
    PointFunction reference_rm;
    PointFunction reference_rf;
    /// Closed-form Davies function f with C_X ~ K / f.
    PointFunction reference_f;
    /// Same references as expressions over the potential's coordinates.
    std::string reference_rm_expression;
    std::string reference_rf_expression;
    std::string reference_f_expression;
    /// Physical region (T > 0) inside the coordinate domain.
    std::function<bool(StatePoint)> valid;
    std::array<GridAxis, 2> default_grid;
    std::vector<std::string> notes;
};

namespace detail {
/// S > 0; the second coordinate may take either sign (charge, spin).
inline std::array<Interval, 2> signed_x_domain() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {Interval{0.0, inf}, Interval{-inf, inf}};
}
}  // namespace detail

inline std::vector<std::string> catalog_names() { return {"reissner-nordstrom", "kerr", "quadratic-toy"}; }

inline CatalogEntry reissner_nordstrom() {
    CatalogEntry e;
    e.spec = parse_potential("sqrt(S)/2 * (1 + Q^2/S)", {"S", "Q"}, {}, "reissner-nordstrom", detail::signed_x_domain());
    e.reference_rm = [](StatePoint p) { return 2.0 * std::pow(p.s, 1.5) / std::pow(p.s - p.x * p.x, 2); };
    e.reference_rf = [](StatePoint p) { return 4.0 * std::pow(p.s, 1.5) / std::pow(p.s - 3.0 * p.x * p.x, 2); };
    e.reference_f = [](StatePoint p) { return p.s - 3.0 * p.x * p.x; };
    e.reference_rm_expression = "2*S^(3/2)/(S - Q^2)^2";
    e.reference_rf_expression = "4*S^(3/2)/(S - 3*Q^2)^2";
    e.reference_f_expression = "S - 3*Q^2";
    e.valid = [](StatePoint p) { return p.s > p.x * p.x; };
    e.default_grid = {GridAxis{0.5, 10.0, 20, true}, GridAxis{0.05, 0.4, 20, true}};
    e.notes = {"4D Reissner-Nordstrom black hole, X = Q (charge), Y = electric potential",
               "C_X diverges on S = 3 Q^2 with n = 1; R^F ~ f^-2 there while R^M stays finite",
               "T > 0 requires S > Q^2"};
    return e;
}

inline CatalogEntry kerr() {
    CatalogEntry e;
    e.spec = parse_potential("sqrt(S/4 + J^2/S)", {"S", "J"}, {}, "kerr", detail::signed_x_domain());
    auto f = [](StatePoint p) {
        const double s2 = p.s * p.s, j2 = p.x * p.x;
        return s2 * s2 - 24.0 * s2 * j2 - 48.0 * j2 * j2;
    };
    e.reference_rm = [](StatePoint) { return 0.0; };
    e.reference_rf = [f](StatePoint p) {
        const double s2 = p.s * p.s, j2 = p.x * p.x;
        const double fv = f(p);
        return 18.0 * std::pow(s2 + 4.0 * j2, 3.5) * (s2 - 4.0 * j2) / (std::pow(p.s, 1.5) * fv * fv);
    };
    e.reference_f = f;
    e.reference_rm_expression = "0";
    e.reference_rf_expression = "18*(S^2 + 4*J^2)^(7/2)*(S^2 - 4*J^2)/(S^(3/2)*(S^4 - 24*S^2*J^2 - 48*J^4)^2)";
    e.reference_f_expression = "S^4 - 24*S^2*J^2 - 48*J^4";
    e.valid = [](StatePoint p) { return p.s > 2.0 * p.x; };
    e.default_grid = {GridAxis{2.5, 25.0, 20, true}, GridAxis{0.1, 1.0, 20, true}};
    e.notes = {"4D Kerr black hole, X = J (angular momentum), Y = angular velocity",
               "C_X diverges on S^4 - 24 S^2 J^2 - 48 J^4 = 0 with n = 1; g^M is flat",
               "T > 0 requires S > 2 J"};
    return e;
}

inline CatalogEntry quadratic_toy() {
    CatalogEntry e;
    e.spec = parse_potential("S^2/2 + X^2/2", {"S", "X"}, {}, "quadratic-toy", detail::signed_x_domain());
    e.reference_rm = [](StatePoint) { return 0.0; };
    e.reference_rf = [](StatePoint) { return 0.0; };
    e.reference_f = [](StatePoint) { return 1.0; };
    e.reference_rm_expression = "0";
    e.reference_rf_expression = "0";
    e.reference_f_expression = "1";
    e.valid = [](StatePoint p) { return p.s > 0.0; };
    e.default_grid = {GridAxis{0.5, 5.0, 10, false}, GridAxis{0.5, 5.0, 10, false}};
    e.notes = {"Flat Hessian geometry: identity Hessian, no third derivatives, no Davies lines"};
    return e;
}

inline CatalogEntry get_entry(std::string_view name) {
    if (name == "reissner-nordstrom") return reissner_nordstrom();
    if (name == "kerr") return kerr();
    if (name == "quadratic-toy") return quadratic_toy();
    throw Error("unknown catalog entry '" + std::string(name) + "'");
}

}  // namespace thermocurv
