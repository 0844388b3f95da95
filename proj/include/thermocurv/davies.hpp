#pragma once

/**
 * Davies lines: curves where a heat capacity diverges.
 *
 * C_X = T / M_SS diverges where M_SS = 0 (CX-line); C_Y = T M_XX / det H
 * diverges where det H = 0 (CY-line). Writing the vanishing denominator as
 * f, R^F blows up like a power of f on a CX-line while R^M stays finite, and
 * the roles swap on a CY-line. The exponent fit measures the observed power
 * directly, and the conjugacy scan finds the matching vertical tangents of
 * the T(S) series.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "thermocurv/errors.hpp"
#include "thermocurv/expression.hpp"
#include "thermocurv/geometry.hpp"
#include "thermocurv/roots.hpp"
#include "thermocurv/state.hpp"

namespace thermocurv {

enum class DaviesLine { CX, CY };
enum class CurvatureKind { RM, RF };

inline const char* to_string(DaviesLine which) { return which == DaviesLine::CX ? "CX" : "CY"; }
inline const char* to_string(CurvatureKind kind) { return kind == CurvatureKind::RM ? "RM" : "RF"; }

/// Denominator whose zero set is the Davies line: M_SS for CX, det Hess M
/// for CY.
inline double divergence_function(const Jet3& m, DaviesLine which) {
    return which == DaviesLine::CX ? m.ss() : m.ss() * m.xx() - m.sx() * m.sx();
}

inline std::array<double, 2> divergence_gradient(const Jet3& m, DaviesLine which) {
    if (which == DaviesLine::CX) return {m.sss(), m.ssx()};
    return {m.sss() * m.xx() + m.ss() * m.sxx() - 2.0 * m.sx() * m.ssx(),
            m.ssx() * m.xx() + m.ss() * m.xxx() - 2.0 * m.sx() * m.sxx()};
}

inline const char* divergence_function_description(DaviesLine which) {
    return which == DaviesLine::CX ? "M_SS (C_X = T / M_SS)" : "M_SS*M_XX - M_SX^2 (C_Y = T M_XX / det Hess M)";
}

// ---------------------------------------------------------------------------
// Locating Davies points
// ---------------------------------------------------------------------------

/// One-parameter slice: the coordinate `free_axis` runs over [lo, hi] while
/// the other one is held at `fixed_value`.
struct Sweep {
    int free_axis = 0;
    double fixed_value = 0.0;
    double lo = 0.0;
    double hi = 1.0;
    int count = 400;
    bool log_spacing = false;

    StatePoint at(double u) const {
        StatePoint p;
        p[free_axis] = u;
        p[1 - free_axis] = fixed_value;
        return p;
    }

    std::vector<double> values() const {
        std::vector<double> out;
        for (int i = 0; i < count; ++i) {
            const double w = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
            out.push_back(log_spacing ? std::exp(std::log(lo) + w * (std::log(hi) - std::log(lo))) : lo + w * (hi - lo));
        }
        return out;
    }
};

struct DaviesPoint {
    StatePoint point;
    double f_value = 0.0;
    double scale = 1.0;
    roots::Bracket bracket{};
    int iterations = 0;
};

struct DaviesLocus {
    DaviesLine which = DaviesLine::CX;
    std::vector<DaviesPoint> points;
    std::string f_definition;
};

inline DaviesLocus find_davies_points(const PotentialSpec& spec, DaviesLine which, const Sweep& sweep) {
    if (sweep.count < 2 || !(sweep.lo < sweep.hi)) throw Error("sweep needs count >= 2 and lo < hi");
    DaviesLocus locus{which, {}, divergence_function_description(which)};

    auto f_at = [&](double u) { return divergence_function(eval_jet(spec, sweep.at(u)), which); };
    auto safe_f = [&](double u) -> std::optional<double> {
        try {
            const double v = f_at(u);
            return std::isfinite(v) ? std::optional(v) : std::nullopt;
        } catch (const Error&) {
            return std::nullopt;
        }
    };

    const auto grid = sweep.values();
    std::vector<std::optional<double>> values;
    values.reserve(grid.size());
    for (double u : grid) values.push_back(safe_f(u));

    auto push = [&](double u, double fu, roots::Bracket b, int iterations) {
        const StatePoint p = sweep.at(u);
        const double scale = local_scale(eval_jet(spec, p));
        if (!locus.points.empty() && std::abs(locus.points.back().point[sweep.free_axis] - u) <= 1e-12 * std::max(1.0, std::abs(u)))
            return;
        locus.points.push_back({p, fu, scale, b, iterations});
    };

    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (values[i] && *values[i] == 0.0) {
            push(grid[i], 0.0, {grid[i], grid[i], 0.0, 0.0}, 0);
            continue;
        }
        if (i + 1 >= grid.size() || !values[i] || !values[i + 1]) continue;
        if (!roots::opposite_signs(*values[i], *values[i + 1])) continue;
        const roots::Bracket b{grid[i], grid[i + 1], *values[i], *values[i + 1]};
        const double scale = local_scale(eval_jet(spec, sweep.at(0.5 * (b.lo + b.hi))));
        const auto root = roots::bisect_secant(f_at, b, 1e-12 * scale);
        push(root.x, root.fx, b, root.iterations);
    }
    return locus;
}

// ---------------------------------------------------------------------------
// Divergence exponent
// ---------------------------------------------------------------------------

enum class FitOutcome { divergent, finite_limit };

struct ExponentFit {
    CurvatureKind which_r = CurvatureKind::RF;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    /// |f| at each sample (geometric sequence) and the curvature there.
    std::vector<double> window;
    std::vector<double> values;
    std::vector<StatePoint> samples;
    FitOutcome outcome = FitOutcome::finite_limit;
    /// Curvature on the line itself when finite.
    double limit_value = std::numeric_limits<double>::quiet_NaN();
};

struct FitOptions {
    double first = 1e-1;
    double last = 1e-4;
    double factor = 0.5;
    Tolerances tolerances;
};

struct Direction {
    double ds = 1.0;
    double dx = 0.0;
};

namespace detail {

inline double select(const CurvatureResult& c, CurvatureKind kind) { return kind == CurvatureKind::RM ? c.r_m : c.r_f; }

inline bool divergent_flag(const CurvatureResult& c, CurvatureKind kind) {
    return c.flags.has(kind == CurvatureKind::RM ? Flag::div_rm : Flag::div_rf);
}

struct LineFit {
    double slope, intercept, r_squared;
};

inline LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double slope = sxx > 0 ? sxy / sxx : 0.0;
    const double intercept = my - slope * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (intercept + slope * xs[i]);
        ss_res += e * e;
    }
    const double r2 = syy > 0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return {slope, intercept, r2};
}

}  // namespace detail

/// Samples the curvature along a ray leaving `locus_point` in direction
/// `approach`, at points where |f| runs geometrically from first*scale down to
/// last*scale, and fits log|R| against log|f|.
///
/// The f-scale is |grad f . u| * max(1, |p|) / 10, i.e. the sampled distances
/// from the line run from about 1% to 1e-5 of the state's magnitude, which
/// keeps the window in the asymptotic regime.
inline ExponentFit fit_divergence_exponent(const PotentialSpec& spec, DaviesLine which, StatePoint locus_point,
                                           CurvatureKind which_r, Direction approach, FitOptions options = {}) {
    const double norm = std::hypot(approach.ds, approach.dx);
    if (!(norm > 0.0)) throw Error("approach direction must be nonzero");
    const double us = approach.ds / norm, ux = approach.dx / norm;

    const Jet3 m0 = eval_jet(spec, locus_point);
    const auto grad = divergence_gradient(m0, which);
    const double slope_along = grad[0] * us + grad[1] * ux;
    if (!(std::abs(slope_along) > 1e-8 * std::hypot(grad[0], grad[1]))) {
        throw Error("approach direction is tangent to the Davies line");
    }
    const double length = 0.1 * std::max(1.0, std::hypot(locus_point.s, locus_point.x));
    const double f_scale = std::abs(slope_along) * length;
    const double f0 = divergence_function(m0, which);

    auto point_at = [&](double d) { return StatePoint{locus_point.s + d * us, locus_point.x + d * ux}; };
    auto abs_f_at = [&](double d) { return std::abs(divergence_function(eval_jet(spec, point_at(d)), which)); };

    ExponentFit fit;
    fit.which_r = which_r;
    std::vector<double> log_f, log_r;
    for (double target = options.first * f_scale; target >= options.last * f_scale * (1.0 - 1e-9);
         target *= options.factor) {
        // |f| grows roughly linearly in d; bracket target between 0 and a
        // distance where |f| exceeds it.
        double hi = 2.0 * (target + std::abs(f0)) / std::abs(slope_along);
        int guard = 0;
        while (abs_f_at(hi) < target) {
            hi *= 2.0;
            if (++guard > 60) throw Error("could not reach the requested |f| along the approach direction");
        }
        auto h = [&](double d) { return abs_f_at(d) - target; };
        const double h_lo = h(0.0), h_hi = h(hi);
        const auto root = roots::bisect_secant(h, roots::Bracket{0.0, hi, h_lo, h_hi}, 1e-6 * target);
        const StatePoint p = point_at(root.x);
        const auto curvature = curvature_from_M_jet(eval_jet(spec, p), options.tolerances);
        const double r = detail::select(curvature, which_r);
        fit.samples.push_back(p);
        fit.window.push_back(target + root.fx);
        fit.values.push_back(r);
        if (r != 0.0 && std::isfinite(r)) {
            log_f.push_back(std::log(target + root.fx));
            log_r.push_back(std::log(std::abs(r)));
        }
    }

    if (log_f.size() >= 2) {
        const auto lf = detail::least_squares(log_f, log_r);
        fit.slope = lf.slope;
        fit.intercept = lf.intercept;
        fit.r_squared = lf.r_squared;
    } else {
        fit.slope = 0.0;
        fit.intercept = 0.0;
        fit.r_squared = 1.0;
    }

    fit.outcome = (fit.slope < -0.5 && fit.r_squared > 0.9) ? FitOutcome::divergent : FitOutcome::finite_limit;
    if (fit.outcome == FitOutcome::finite_limit) {
        const auto on_line = curvature_from_M_jet(m0, options.tolerances);
        fit.limit_value = detail::divergent_flag(on_line, which_r) && !fit.values.empty() ? fit.values.back()
                                                                                          : detail::select(on_line, which_r);
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Conjugacy diagrams
// ---------------------------------------------------------------------------

enum class Ensemble { fixed_x, fixed_y };

struct ConjugacySample {
    double s = 0.0;
    double x = 0.0;
    double t = 0.0;
    double y = 0.0;
};

/// Series along S with X (or Y) held fixed. The plotted pair is (T, S);
/// turning points are values of S where dT/dS along the series changes sign,
/// i.e. where the S-vs-T diagram has a vertical tangent.
struct ConjugacyScan {
    Ensemble ensemble = Ensemble::fixed_x;
    double fixed_value = 0.0;
    std::vector<ConjugacySample> samples;
    std::vector<double> turning_points;
};

struct ConjugacySweep {
    double fixed_value = 0.0;  // X for fixed_x, Y for fixed_y
    double s_lo = 0.0;
    double s_hi = 1.0;
    int count = 400;
    /// Starting guess for X on fixed-Y series.
    double x_guess = 1.0;
};

namespace detail {

/// X with M_X(s, X) = y, continuing from `x_guess`.
inline double solve_x_for_y(const PotentialSpec& spec, double s, double y, double x_guess) {
    const Interval xd = spec.domain()[1];
    auto g = [&](double x) { return eval_jet(spec, {s, x}).d1[1] - y; };
    auto g_dg = [&](double x) {
        const Jet3 j = eval_jet(spec, {s, x});
        return std::pair{j.d1[1] - y, j.xx()};
    };
    const auto b = roots::bracket_outward(g, x_guess, xd.lo, xd.hi, 1e-3 * std::max(1.0, std::abs(x_guess)));
    if (!b) throw SolverError(SolverError::Reason::no_bracket, "no X with M_X = Y at S = " + format_number(s));
    return roots::newton_bisect(g_dg, *b, 1e-13 * std::max(1.0, std::abs(y))).x;
}

}  // namespace detail

inline ConjugacyScan conjugacy_scan(const PotentialSpec& spec, Ensemble ensemble, const ConjugacySweep& sweep) {
    if (sweep.count < 3 || !(sweep.s_lo < sweep.s_hi)) throw Error("conjugacy sweep needs count >= 3 and s_lo < s_hi");
    ConjugacyScan scan;
    scan.ensemble = ensemble;
    scan.fixed_value = sweep.fixed_value;

    double x_prev = sweep.x_guess;
    auto x_for = [&](double s, double guess) {
        return ensemble == Ensemble::fixed_x ? sweep.fixed_value : detail::solve_x_for_y(spec, s, sweep.fixed_value, guess);
    };
    for (int i = 0; i < sweep.count; ++i) {
        const double s = sweep.s_lo + (sweep.s_hi - sweep.s_lo) * i / (sweep.count - 1);
        const double x = x_for(s, x_prev);
        x_prev = x;
        const Jet3 m = eval_jet(spec, {s, x});
        scan.samples.push_back({s, x, m.d1[0], m.d1[1]});
    }

    // Exact dT/dS along the series: M_SS at fixed X, det H / M_XX at fixed Y.
    auto exact_slope = [&](double s, double guess) {
        const Jet3 m = eval_jet(spec, {s, x_for(s, guess)});
        if (ensemble == Ensemble::fixed_x) return m.ss();
        return (m.ss() * m.xx() - m.sx() * m.sx()) / m.xx();
    };

    const auto& smp = scan.samples;
    const std::size_t n = smp.size();
    std::vector<double> slope(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = i == 0 ? 0 : i - 1;
        const std::size_t b = i + 1 == n ? n - 1 : i + 1;
        slope[i] = (smp[b].t - smp[a].t) / (smp[b].s - smp[a].s);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!roots::opposite_signs(slope[i], slope[i + 1])) continue;
        // The sampled sign change may be displaced by one cell; widen until
        // the exact slope brackets a root.
        std::optional<roots::RootResult> root;
        for (std::size_t widen = 0; widen <= 1 && !root; ++widen) {
            const std::size_t lo = i >= widen ? i - widen : 0;
            const std::size_t hi = std::min(n - 1, i + 1 + widen);
            const double f_lo = exact_slope(smp[lo].s, smp[lo].x), f_hi = exact_slope(smp[hi].s, smp[hi].x);
            if (!roots::opposite_signs(f_lo, f_hi) && f_lo != 0.0 && f_hi != 0.0) continue;
            const double mid_guess = smp[i].x;
            const double scale = local_scale(eval_jet(spec, {smp[i].s, smp[i].x}));
            root = roots::bisect_secant([&](double s) { return exact_slope(s, mid_guess); },
                                        roots::Bracket{smp[lo].s, smp[hi].s, f_lo, f_hi}, 1e-12 * scale);
        }
        if (!root) continue;
        if (!scan.turning_points.empty() && std::abs(scan.turning_points.back() - root->x) <= 1e-12 * std::max(1.0, std::abs(root->x)))
            continue;
        scan.turning_points.push_back(root->x);
    }
    return scan;
}

}  // namespace thermocurv
