#pragma once

/**
 * Second-order response functions from the Hessian of M(S, X).
 *
 * With H = Hess M and D = det H, implicit differentiation of T = M_S and
 * Y = M_X gives
 *
 *   (dS/dT)_X = 1/M_SS          (dS/dT)_Y = M_XX/D
 *   (dX/dY)_T = M_SS/D          (dX/dY)_S = 1/M_XX
 *   (dX/dT)_Y = -M_SX/D
 *
 * and
 *
 *   C_X = T (dS/dT)_X      C_Y = T (dS/dT)_Y      alpha = X^-1 (dX/dT)_Y
 *   kappa_T = X^-1 (dX/dY)_T                      kappa_S = X^-1 (dX/dY)_S
 *
 * The susceptibilities and alpha are signed for Y = dM/dX (the analogue of
 * -P for a fluid), which is the convention under which
 *
 *   C_Y - C_X = T X alpha^2 / kappa_T,   kappa_T - kappa_S = T X alpha^2 / C_Y,
 *   C_X / C_Y = kappa_S / kappa_T,
 *
 * and g^M = (T/C_X) dS^2 - 2 (T alpha / (C_X kappa_T)) dS dX
 *           + (C_Y / (X kappa_T C_X)) dX^2
 *
 * hold together.
 */

#include <algorithm>
#include <cmath>
#include <initializer_list>

#include "thermocurv/errors.hpp"
#include "thermocurv/flags.hpp"
#include "thermocurv/geometry.hpp"
#include "thermocurv/jet.hpp"
#include "thermocurv/state.hpp"

namespace thermocurv {

struct ResponseSet {
    double t = 0.0;
    double y = 0.0;
    double x = 0.0;
    double c_x = 0.0;
    double c_y = 0.0;
    double alpha = 0.0;
    double kappa_t = 0.0;
    double kappa_s = 0.0;
    double gamma = 0.0;
    Flags flags;
};

/// Response set at `p` from the M-jet there. Requires x > 0.
inline ResponseSet responses_at(const Jet3& m, StatePoint p, Tolerances tol = {}) {
    if (!(p.x > 0.0)) throw DomainError("response functions need X > 0", "X", p.x);
    const double a = m.ss(), b = m.sx(), c = m.xx();
    const double det = a * c - b * b;
    const double threshold = tol.singular_eps * local_scale(m);
    const bool ss_zero = std::abs(a) < threshold;
    const bool xx_zero = std::abs(c) < threshold;
    const bool det_zero = std::abs(det) < threshold;
    if (ss_zero && xx_zero && det_zero) {
        throw SolverError(SolverError::Reason::singular, "Hessian of M is singular in every entry");
    }

    ResponseSet r;
    r.t = m.d1[0];
    r.y = m.d1[1];
    r.x = p.x;
    r.c_x = ratio_or_infinity(r.t, a);
    r.c_y = ratio_or_infinity(r.t * c, det);
    r.alpha = ratio_or_infinity(-b, p.x * det);
    r.kappa_t = ratio_or_infinity(a, p.x * det);
    r.kappa_s = ratio_or_infinity(1.0, p.x * c);
    r.gamma = ratio_or_infinity(a * c, det);

    r.flags.set(Flag::div_cx, ss_zero);
    r.flags.set(Flag::zero_kappa_t, ss_zero);
    r.flags.set(Flag::div_cy, det_zero);
    r.flags.set(Flag::div_alpha, det_zero && b != 0.0);
    r.flags.set(Flag::div_kappa_t, det_zero);
    r.flags.set(Flag::div_kappa_s, xx_zero);
    r.flags.set(Flag::neg_t, !(r.t > 0.0));
    r.flags.set(Flag::ill_conditioned, m.near_singular);
    return r;
}

/// A normalised identity residual; `applicable` is false when an entry the
/// identity involves is flagged divergent or vanishes.
struct IdentityResidual {
    double value = 0.0;
    bool applicable = true;
};

namespace detail {

inline bool all_finite(std::initializer_list<double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

inline double norm_floor(std::initializer_list<double> values) {
    double m = 1.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

inline bool divergent(const ResponseSet& r) {
    return r.flags.has(Flag::div_cx) || r.flags.has(Flag::div_cy) || r.flags.has(Flag::div_alpha) ||
           r.flags.has(Flag::div_kappa_t) || r.flags.has(Flag::div_kappa_s);
}

}  // namespace detail

/// (C_Y - C_X - T X alpha^2 / kappa_T) / max(|C_X|, |C_Y|, 1).
inline IdentityResidual check_identity_1(const ResponseSet& r) {
    if (detail::divergent(r) || r.kappa_t == 0.0 ||
        !detail::all_finite({r.t, r.c_x, r.c_y, r.alpha, r.kappa_t}))
        return {0.0, false};
    const double value = r.c_y - r.c_x - r.t * r.x * r.alpha * r.alpha / r.kappa_t;
    return {value / detail::norm_floor({r.c_x, r.c_y}), true};
}

/// (kappa_T - kappa_S - T X alpha^2 / C_Y) / max(|kappa_T|, |kappa_S|, 1).
inline IdentityResidual check_identity_2(const ResponseSet& r) {
    if (detail::divergent(r) || r.c_y == 0.0 || !detail::all_finite({r.t, r.c_y, r.alpha, r.kappa_t, r.kappa_s}))
        return {0.0, false};
    const double value = r.kappa_t - r.kappa_s - r.t * r.x * r.alpha * r.alpha / r.c_y;
    return {value / detail::norm_floor({r.kappa_t, r.kappa_s}), true};
}

/// (C_X/C_Y - kappa_S/kappa_T) / max(|C_X/C_Y|, |kappa_S/kappa_T|, 1).
inline IdentityResidual check_identity_3(const ResponseSet& r) {
    if (detail::divergent(r) || r.c_y == 0.0 || r.kappa_t == 0.0 ||
        !detail::all_finite({r.c_x, r.c_y, r.kappa_t, r.kappa_s}))
        return {0.0, false};
    const double lhs = r.c_x / r.c_y;
    const double rhs = r.kappa_s / r.kappa_t;
    return {(lhs - rhs) / detail::norm_floor({lhs, rhs}), true};
}

/// g^M rebuilt from the response functions. Throws when an entry it needs
/// is divergent or zero.
inline MetricTensor2 metric_in_responses(const ResponseSet& r, StatePoint p) {
    if (detail::divergent(r) || r.c_x == 0.0 || r.kappa_t == 0.0 || p.x == 0.0 ||
        !detail::all_finite({r.t, r.c_x, r.c_y, r.alpha, r.kappa_t}))
        throw DomainError("metric from response functions not applicable at this point", "metric_in_responses", p.s);
    return {r.t / r.c_x, -r.t * r.alpha / (r.c_x * r.kappa_t), r.c_y / (p.x * r.kappa_t * r.c_x), Chart::SX,
            PotentialKind::M};
}

/// Determinants of g^M and g^F expressed through the response functions,
/// each in both equivalent forms.
struct ResponseDeterminants {
    double gm_via_kappa_t = 0.0;  // T / (X kappa_T C_X)
    double gm_via_kappa_s = 0.0;  // T / (X kappa_S C_Y)
    double gf_via_kappa_t = 0.0;  // -T C_Y / (X kappa_T C_X^2)
    double gf_via_kappa_s = 0.0;  // -T / (X kappa_S C_X)
};

inline ResponseDeterminants determinants_in_responses(const ResponseSet& r) {
    ResponseDeterminants d;
    d.gm_via_kappa_t = r.t / (r.x * r.kappa_t * r.c_x);
    d.gm_via_kappa_s = r.t / (r.x * r.kappa_s * r.c_y);
    d.gf_via_kappa_t = -r.t * r.c_y / (r.x * r.kappa_t * r.c_x * r.c_x);
    d.gf_via_kappa_s = -r.t / (r.x * r.kappa_s * r.c_x);
    return d;
}

/// Relative residuals of the determinant relations against the exact
/// Hessian determinants from the M-jet:
///   det g^M = T/(X kappa_T C_X) = T/(X kappa_S C_Y)
///   det g^F = -gamma det g^M = -(kappa_T/kappa_S) det g^M
struct DeterminantResiduals {
    double gm_kappa_t = 0.0;
    double gm_kappa_s = 0.0;
    double gf_gamma = 0.0;
    double gf_kappa_ratio = 0.0;
    bool applicable = true;

    double max() const {
        return std::max({std::abs(gm_kappa_t), std::abs(gm_kappa_s), std::abs(gf_gamma), std::abs(gf_kappa_ratio)});
    }
};

inline DeterminantResiduals check_determinants(const Jet3& m, const ResponseSet& r) {
    DeterminantResiduals out;
    if (detail::divergent(r) || r.c_x == 0.0 || r.c_y == 0.0 || r.kappa_t == 0.0 || r.kappa_s == 0.0 ||
        !detail::all_finite({r.t, r.c_x, r.c_y, r.kappa_t, r.kappa_s, r.gamma})) {
        out.applicable = false;
        return out;
    }
    const double det_gm = metric_M(m).det();
    const double det_gf = metric_F_in_SX(m).det();
    auto rel = [](double a, double b) { return (a - b) / std::max(std::abs(b), 1e-300); };
    const auto d = determinants_in_responses(r);
    out.gm_kappa_t = rel(d.gm_via_kappa_t, det_gm);
    out.gm_kappa_s = rel(d.gm_via_kappa_s, det_gm);
    out.gf_gamma = rel(-r.gamma * det_gm, det_gf);
    out.gf_kappa_ratio = rel(-(r.kappa_t / r.kappa_s) * det_gm, det_gf);
    return out;
}

}  // namespace thermocurv
