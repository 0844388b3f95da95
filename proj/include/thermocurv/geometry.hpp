#pragma once

/**
 * Hessian metrics g^M, g^F and their scalar curvatures.
 *
 * g^M is the Hessian of M(S,X) in (S,X); g^F is the Hessian of the free
 * energy F(T,X) = M - TS in (T,X). Each becomes diagonal in the other
 * potential's natural chart:
 *
 *   g^F = -M_SS dS^2 + M_XX dX^2        (S,X chart)
 *   g^M = -F_TT dT^2 + F_XX dX^2        (T,X chart)
 *
 * so each curvature has a full-Hessian form and a diagonal form. The two
 * forms are computed from independent jets (M-jet vs Legendre-transformed
 * F-jet) and must agree. The related metrics of H = M - YX and
 * G = M - TS - YX satisfy g^H = -g^F and g^G = -g^M and are not modelled
 * separately.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "thermocurv/errors.hpp"
#include "thermocurv/expression.hpp"
#include "thermocurv/flags.hpp"
#include "thermocurv/jet.hpp"
#include "thermocurv/roots.hpp"
#include "thermocurv/state.hpp"

namespace thermocurv {

enum class Chart { SX, TX };
enum class PotentialKind { M, F };

struct MetricTensor2 {
    double g11 = 0.0;
    double g12 = 0.0;
    double g22 = 0.0;
    Chart chart = Chart::SX;
    PotentialKind kind = PotentialKind::M;

    constexpr double det() const { return g11 * g22 - g12 * g12; }
};

struct CurvatureResult {
    double r_m = 0.0;
    double r_f = 0.0;
    /// Determinants in the chart the result was computed in.
    double det_gm = 0.0;
    double det_gf = 0.0;
    Chart chart = Chart::SX;
    Flags flags;
};

/// max(1, |H11| + |H12| + |H22|) for the Hessian stored in `jet`.
inline double local_scale(const Jet3& jet) {
    return std::max(1.0, std::abs(jet.d2[0]) + std::abs(jet.d2[1]) + std::abs(jet.d2[2]));
}

/// num/den, with an exactly vanishing denominator mapped to a signed infinity.
inline double ratio_or_infinity(double num, double den) {
    if (den != 0.0) return num / den;
    if (num == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::copysign(std::numeric_limits<double>::infinity(), num);
}

// ---------------------------------------------------------------------------
// Curvature formulas on raw derivative coefficients. `h2` = (P_11, P_12, P_22)
// and `h3` = (P_111, P_112, P_122, P_222) for a potential P in its natural
// coordinates.
// ---------------------------------------------------------------------------

/// Scalar curvature of the Hessian metric of P, expanded form.
inline double hessian_curvature(const std::array<double, 3>& h2, const std::array<double, 4>& h3) {
    const auto [p11, p12, p22] = h2;
    const auto [p111, p112, p122, p222] = h3;
    const double num = p11 * (p122 * p122 - p112 * p222) + p22 * (p112 * p112 - p122 * p111) +
                       p12 * (p111 * p222 - p112 * p122);
    const double det = p11 * p22 - p12 * p12;
    return ratio_or_infinity(num, 2.0 * det * det);
}

/// Same curvature through the 3x3 determinant form -det(h) / (2 det(g)^2).
inline double hessian_curvature_determinant_form(const std::array<double, 3>& h2, const std::array<double, 4>& h3) {
    const std::array<std::array<double, 3>, 3> h{{
        {h2[0], h2[1], h2[2]},
        {h3[0], h3[1], h3[2]},
        {h3[1], h3[2], h3[3]},
    }};
    const double det_h = h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1]) -
                         h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0]) +
                         h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0]);
    const double det = h2[0] * h2[2] - h2[1] * h2[1];
    return ratio_or_infinity(-det_h, 2.0 * det * det);
}

/// Scalar curvature of the metric -P_11 du^2 + P_22 dv^2, i.e. the Hessian
/// metric of P's partial Legendre transform written in P's coordinates.
inline double transformed_diagonal_curvature(const std::array<double, 3>& h2, const std::array<double, 4>& h3) {
    const double p11 = h2[0], p22 = h2[2];
    const auto [p111, p112, p122, p222] = h3;
    const double num = -p11 * p122 * p122 + p22 * p112 * p112 + p11 * p112 * p222 - p22 * p122 * p111;
    return ratio_or_infinity(num, 2.0 * p11 * p11 * p22 * p22);
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// g^M in (S,X): the Hessian of M.
inline MetricTensor2 metric_M(const Jet3& m) { return {m.d2[0], m.d2[1], m.d2[2], Chart::SX, PotentialKind::M}; }

/// g^F in (S,X): diag(-M_SS, M_XX).
inline MetricTensor2 metric_F_in_SX(const Jet3& m) { return {-m.d2[0], 0.0, m.d2[2], Chart::SX, PotentialKind::F}; }

/// g^F in (T,X): the Hessian of F.
inline MetricTensor2 metric_F(const Jet3& f) { return {f.d2[0], f.d2[1], f.d2[2], Chart::TX, PotentialKind::F}; }

/// g^M in (T,X): diag(-F_TT, F_XX).
inline MetricTensor2 metric_M_in_TX(const Jet3& f) { return {-f.d2[0], 0.0, f.d2[2], Chart::TX, PotentialKind::M}; }

// ---------------------------------------------------------------------------
// Curvature from the M-jet
// ---------------------------------------------------------------------------

inline CurvatureResult curvature_from_M_jet(const Jet3& m, Tolerances tol = {}) {
    CurvatureResult r;
    r.chart = Chart::SX;
    r.r_m = hessian_curvature(m.d2, m.d3);
    r.r_f = transformed_diagonal_curvature(m.d2, m.d3);
    r.det_gm = metric_M(m).det();
    r.det_gf = -m.d2[0] * m.d2[2];

    const double threshold = tol.singular_eps * local_scale(m);
    r.flags.set(Flag::div_rm, std::abs(r.det_gm) < threshold);
    r.flags.set(Flag::div_rf, std::abs(m.d2[0]) < threshold || std::abs(m.d2[2]) < threshold);
    r.flags.set(Flag::ill_conditioned, m.near_singular);
    return r;
}

// ---------------------------------------------------------------------------
// Legendre transform to F(T,X)
// ---------------------------------------------------------------------------

struct LegendrePoint {
    double t = 0.0;
    double x = 0.0;
    double s_of_tx = 0.0;
    double f_value = 0.0;
    /// Jet of F in (T, X): d1 = (F_T, F_X), d2 = (F_TT, F_TX, F_XX), ...
    Jet3 f_jet;
    /// Jet of M in (S, X) at (s_of_tx, x).
    Jet3 m_jet;
    double residual = 0.0;
    int iterations = 0;
};

struct LegendreOptions {
    int max_iterations = 200;
    Tolerances tolerances;
};

/// F-jet in (T,X) from the M-jet at (s, x) where T = M_S, by implicit
/// differentiation of T = M_S(S(T,X), X), solved order by order.
inline Jet3 legendre_jet(const Jet3& m, double s) {
    const double a = m.ss(), b = m.sx(), c = m.xx();
    const double msss = m.sss(), mssx = m.ssx(), msxx = m.sxx(), mxxx = m.xxx();
    const double t = m.d1[0];

    // First order: a S_T = 1, a S_X + b = 0.
    const double s_t = 1.0 / a;
    const double s_x = -b / a;

    // Second order, differentiating both relations once more. Total
    // X-derivatives of M's coefficients along S(T,X):
    const double da_dx = msss * s_x + mssx;
    const double db_dx = mssx * s_x + msxx;
    const double dc_dx = msxx * s_x + mxxx;
    const double s_tt = -msss * s_t * s_t / a;
    const double s_tx = -da_dx * s_t / a;
    const double s_xx = -(da_dx * s_x + db_dx) / a;

    // F_T = -S and F_X = M_X(S(T,X), X).
    Jet3 f;
    f.v = m.v - t * s;
    f.d1 = {-s, m.d1[1]};
    f.d2 = {-s_t, -s_x, c + b * s_x};
    f.d3 = {-s_tt, -s_tx, -s_xx, dc_dx + db_dx * s_x + b * s_xx};
    f.near_singular = m.near_singular;
    return f;
}

/// Solves M_S(s, x) = t for s near `s_guess` and builds the F-jet there.
inline LegendrePoint legendre_at(const PotentialSpec& spec, double t, double x, double s_guess,
                                 LegendreOptions options = {}) {
    const Interval s_domain = spec.domain()[0];
    auto residual = [&](double s) { return eval_jet(spec, {s, x}).d1[0] - t; };
    auto residual_and_slope = [&](double s) {
        const Jet3 j = eval_jet(spec, {s, x});
        return std::pair{j.d1[0] - t, j.d2[0]};
    };

    const double step = 1e-3 * std::max(1.0, std::abs(s_guess));
    const auto bracket = roots::bracket_outward(residual, s_guess, s_domain.lo, s_domain.hi, step);
    if (!bracket) {
        throw SolverError(SolverError::Reason::no_bracket,
                          "no sign change of M_S - T found around S = " + format_number(s_guess));
    }
    const double f_tol = 1e-12 * std::max(1.0, std::abs(t));
    const auto root = roots::newton_bisect(residual_and_slope, *bracket, f_tol, options.max_iterations);

    LegendrePoint lp;
    lp.t = t;
    lp.x = x;
    lp.s_of_tx = root.x;
    lp.residual = root.fx;
    lp.iterations = root.iterations;
    lp.m_jet = eval_jet(spec, {root.x, x});
    if (std::abs(lp.m_jet.ss()) < options.tolerances.singular_eps * local_scale(lp.m_jet)) {
        throw SolverError(SolverError::Reason::singular,
                          "M_SS vanishes at S = " + format_number(root.x) + ": Legendre transform is singular");
    }
    lp.f_jet = legendre_jet(lp.m_jet, root.x);
    lp.f_value = lp.f_jet.v;
    return lp;
}

inline CurvatureResult curvature_from_F_jet(const LegendrePoint& lp, Tolerances tol = {}) {
    const Jet3& f = lp.f_jet;
    CurvatureResult r;
    r.chart = Chart::TX;
    r.r_m = transformed_diagonal_curvature(f.d2, f.d3);
    r.r_f = hessian_curvature(f.d2, f.d3);
    r.det_gf = metric_F(f).det();
    r.det_gm = -f.d2[0] * f.d2[2];

    const double threshold = tol.singular_eps * local_scale(f);
    r.flags.set(Flag::div_rm, std::abs(f.d2[0]) < threshold || std::abs(f.d2[2]) < threshold);
    r.flags.set(Flag::div_rf, std::abs(r.det_gf) < threshold);
    r.flags.set(Flag::ill_conditioned, f.near_singular);
    return r;
}

// ---------------------------------------------------------------------------
// General two-dimensional curvature by finite differences
// ---------------------------------------------------------------------------

namespace detail {

struct MetricSample {
    std::array<double, 3> g;      // g11, g12, g22
    std::array<double, 3> d1;     // d/du
    std::array<double, 3> d2;     // d/dv
    std::array<double, 3> d11;    // d2/du2
    std::array<double, 3> d22;    // d2/dv2
    std::array<double, 3> d12;    // d2/dudv
};

inline std::array<double, 3> components(const MetricTensor2& m) { return {m.g11, m.g12, m.g22}; }

template <class Field>
MetricSample sample_metric(Field&& field, StatePoint p, std::array<double, 2> h) {
    auto at = [&](double du, double dv) { return components(field(StatePoint{p.s + du, p.x + dv})); };
    MetricSample out{};
    out.g = at(0, 0);
    const auto u_p1 = at(h[0], 0), u_m1 = at(-h[0], 0), u_p2 = at(2 * h[0], 0), u_m2 = at(-2 * h[0], 0);
    const auto v_p1 = at(0, h[1]), v_m1 = at(0, -h[1]), v_p2 = at(0, 2 * h[1]), v_m2 = at(0, -2 * h[1]);
    const auto pp1 = at(h[0], h[1]), pm1 = at(h[0], -h[1]), mp1 = at(-h[0], h[1]), mm1 = at(-h[0], -h[1]);
    const auto pp2 = at(2 * h[0], 2 * h[1]), pm2 = at(2 * h[0], -2 * h[1]), mp2 = at(-2 * h[0], 2 * h[1]),
               mm2 = at(-2 * h[0], -2 * h[1]);
    for (std::size_t c = 0; c < 3; ++c) {
        out.d1[c] = (-u_p2[c] + 8 * u_p1[c] - 8 * u_m1[c] + u_m2[c]) / (12 * h[0]);
        out.d2[c] = (-v_p2[c] + 8 * v_p1[c] - 8 * v_m1[c] + v_m2[c]) / (12 * h[1]);
        out.d11[c] = (-u_p2[c] + 16 * u_p1[c] - 30 * out.g[c] + 16 * u_m1[c] - u_m2[c]) / (12 * h[0] * h[0]);
        out.d22[c] = (-v_p2[c] + 16 * v_p1[c] - 30 * out.g[c] + 16 * v_m1[c] - v_m2[c]) / (12 * h[1] * h[1]);
        // Richardson-extrapolated mixed difference, fourth order.
        const double mixed_h = (pp1[c] - pm1[c] - mp1[c] + mm1[c]) / (4 * h[0] * h[1]);
        const double mixed_2h = (pp2[c] - pm2[c] - mp2[c] + mm2[c]) / (16 * h[0] * h[1]);
        out.d12[c] = (4 * mixed_h - mixed_2h) / 3;
    }
    return out;
}

inline std::array<double, 2> default_steps(StatePoint p, std::optional<double> h) {
    if (h) return {*h, *h};
    return {1e-4 * std::max(1.0, std::abs(p.s)), 1e-4 * std::max(1.0, std::abs(p.x))};
}

}  // namespace detail

/// Scalar curvature of an arbitrary 2D metric field,
///
///   R = -1/sqrt(D) [ ((g11,2 - g12,1)/sqrt(D)),2 + ((g22,1 - g12,2)/sqrt(D)),1 ]
///       - det(h) / (2 D^2),
///
/// with metric partials from 5-point central differences. The bracket is
/// expanded so that indefinite metrics (D < 0) need no complex arithmetic.
template <class Field>
double curvature_general_2d_fd(Field&& metric_field, StatePoint p, std::optional<double> h = std::nullopt) {
    const auto m = detail::sample_metric(metric_field, p, detail::default_steps(p, h));
    const auto& g = m.g;
    const double det = g[0] * g[2] - g[1] * g[1];
    if (det == 0.0 || !std::isfinite(det)) throw SingularMetricError("metric determinant vanishes");

    auto ddet = [&](const std::array<double, 3>& d) { return d[0] * g[2] + g[0] * d[2] - 2.0 * g[1] * d[1]; };
    const double det_1 = ddet(m.d1), det_2 = ddet(m.d2);

    const double a = m.d2[0] - m.d1[1];     // g11,2 - g12,1
    const double b = m.d1[2] - m.d2[1];     // g22,1 - g12,2
    const double a_2 = m.d22[0] - m.d12[1];  // (g11,2 - g12,1),2
    const double b_1 = m.d11[2] - m.d12[1];  // (g22,1 - g12,2),1

    const double det_h = g[0] * (m.d1[1] * m.d2[2] - m.d1[2] * m.d2[1]) - g[1] * (m.d1[0] * m.d2[2] - m.d1[2] * m.d2[0]) +
                         g[2] * (m.d1[0] * m.d2[1] - m.d1[1] * m.d2[0]);

    return -(a_2 + b_1) / det + (a * det_2 + b * det_1) / (2.0 * det * det) - det_h / (2.0 * det * det);
}

/// Diagonal-metric specialisation (g12 ignored):
///   R = -1/sqrt(D) [ (g11,2/sqrt(D)),2 + (g22,1/sqrt(D)),1 ].
template <class Field>
double curvature_diagonal_fd(Field&& metric_field, StatePoint p, std::optional<double> h = std::nullopt) {
    const auto m = detail::sample_metric(metric_field, p, detail::default_steps(p, h));
    const double det = m.g[0] * m.g[2];
    if (det == 0.0 || !std::isfinite(det)) throw SingularMetricError("metric determinant vanishes");
    const double det_1 = m.d1[0] * m.g[2] + m.g[0] * m.d1[2];
    const double det_2 = m.d2[0] * m.g[2] + m.g[0] * m.d2[2];
    const double a = m.d2[0], b = m.d1[2];
    return -(m.d22[0] + m.d11[2]) / det + (a * det_2 + b * det_1) / (2.0 * det * det);
}

}  // namespace thermocurv
