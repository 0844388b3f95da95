#pragma once

namespace thermocurv {

/// A point (S, X) of the equilibrium state space in the potential's natural
/// coordinates.
struct StatePoint {
    double s = 0.0;
    double x = 0.0;

    constexpr double operator[](int axis) const { return axis == 0 ? s : x; }
    constexpr double& operator[](int axis) { return axis == 0 ? s : x; }

    friend constexpr bool operator==(const StatePoint&, const StatePoint&) = default;
};

}  // namespace thermocurv
