#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "thermocurv/errors.hpp"

namespace thermocurv::roots {

struct Bracket {
    double lo;
    double hi;
    double f_lo;
    double f_hi;
};

struct RootResult {
    double x;
    double fx;
    int iterations;
    Bracket bracket;
};

inline bool opposite_signs(double a, double b) { return (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0); }

/// Safeguarded Newton iteration on [lo, hi] with f(lo), f(hi) of opposite
/// sign. `f_df(x)` returns {f, f'}. A Newton step is taken only when it stays
/// inside the current bracket and shrinks it fast enough; otherwise the
/// interval is bisected.
template <class FDF>
RootResult newton_bisect(FDF&& f_df, Bracket b, double f_tol, int max_iter = 200) {
    if (b.f_lo == 0.0) return {b.lo, 0.0, 0, b};
    if (b.f_hi == 0.0) return {b.hi, 0.0, 0, b};
    if (!opposite_signs(b.f_lo, b.f_hi)) throw SolverError(SolverError::Reason::no_bracket, "root not bracketed");
    if (b.lo > b.hi) {
        std::swap(b.lo, b.hi);
        std::swap(b.f_lo, b.f_hi);
    }
    double x = 0.5 * (b.lo + b.hi);
    double dx_old = b.hi - b.lo;
    double dx = dx_old;
    auto [fx, dfx] = f_df(x);
    for (int it = 1; it <= max_iter; ++it) {
        if (std::abs(fx) <= f_tol) return {x, fx, it, b};
        if (opposite_signs(fx, b.f_lo)) {
            b.hi = x;
            b.f_hi = fx;
        } else {
            b.lo = x;
            b.f_lo = fx;
        }
        const bool newton_ok = dfx != 0.0 && std::isfinite(dfx) && ((x - b.lo) * dfx - fx) * ((x - b.hi) * dfx - fx) < 0.0 &&
                               std::abs(2.0 * fx) <= std::abs(dx_old * dfx);
        dx_old = dx;
        if (newton_ok) {
            dx = fx / dfx;
            x -= dx;
        } else {
            dx = 0.5 * (b.hi - b.lo);
            x = b.lo + dx;
        }
        if (b.hi - b.lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
            std::tie(fx, dfx) = f_df(x);
            if (std::abs(fx) <= f_tol) return {x, fx, it, b};
            throw SolverError(SolverError::Reason::tolerance_not_met,
                              "bracket collapsed with residual " + std::to_string(fx) + " above tolerance");
        }
        std::tie(fx, dfx) = f_df(x);
    }
    throw SolverError(SolverError::Reason::no_convergence, "no convergence after " + std::to_string(max_iter) +
                                                               " iterations");
}

/// Bisection accelerated by Illinois-modified secant steps. Iterates until the
/// bracket collapses to a few ulps, then requires |f| <= f_tol.
template <class F>
RootResult bisect_secant(F&& f, Bracket b, double f_tol, int max_iter = 300) {
    if (b.f_lo == 0.0) return {b.lo, 0.0, 0, b};
    if (b.f_hi == 0.0) return {b.hi, 0.0, 0, b};
    if (!opposite_signs(b.f_lo, b.f_hi)) throw SolverError(SolverError::Reason::no_bracket, "root not bracketed");
    if (b.lo > b.hi) {
        std::swap(b.lo, b.hi);
        std::swap(b.f_lo, b.f_hi);
    }
    double a = b.lo, fa = b.f_lo, c = b.hi, fc = b.f_hi;
    int side = 0;
    for (int it = 1; it <= max_iter; ++it) {
        double x = (a * fc - c * fa) / (fc - fa);
        // Fall back to bisection when the secant point is not strictly inside
        // or every third step to guarantee linear convergence.
        if (!(x > a && x < c) || it % 3 == 0) x = 0.5 * (a + c);
        const double fx = f(x);
        if (fx == 0.0) return {x, fx, it, {a, c, fa, fc}};
        if (opposite_signs(fx, fa)) {
            c = x;
            fc = fx;
            if (side == -1) fa *= 0.5;
            side = -1;
        } else {
            a = x;
            fa = fx;
            if (side == 1) fc *= 0.5;
            side = 1;
        }
        if (c - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
            const double best = std::abs(f(a)) <= std::abs(f(c)) ? a : c;
            const double fbest = f(best);
            if (std::abs(fbest) <= f_tol) return {best, fbest, it, {a, c, f(a), f(c)}};
            throw SolverError(SolverError::Reason::tolerance_not_met,
                              "bracket collapsed with |f| = " + std::to_string(std::abs(fbest)) + " above tolerance");
        }
    }
    throw SolverError(SolverError::Reason::no_convergence,
                      "no convergence after " + std::to_string(max_iter) + " iterations");
}

/// Searches outward from x0 for the sign change nearest to it, stepping with
/// doubling increments in both directions and staying strictly inside the
/// open interval (lo_limit, hi_limit). Evaluations that throw are treated as
/// the edge of the usable region.
template <class F>
std::optional<Bracket> bracket_outward(F&& f, double x0, double lo_limit, double hi_limit, double step,
                                       int max_expansions = 80) {
    auto safe = [&](double x) -> std::optional<double> {
        try {
            const double v = f(x);
            if (!std::isfinite(v)) return std::nullopt;
            return v;
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    const auto f0 = safe(x0);
    if (!f0) return std::nullopt;
    if (*f0 == 0.0) return Bracket{x0, x0, 0.0, 0.0};

    struct Side {
        double x, fx, step;
        double limit;
        bool alive;
    };
    Side up{x0, *f0, step, hi_limit, true};
    Side down{x0, *f0, -step, lo_limit, true};
    for (int k = 0; k < max_expansions && (up.alive || down.alive); ++k) {
        for (Side* side : {&up, &down}) {
            if (!side->alive) continue;
            double next = side->x + side->step;
            const bool beyond = side->step > 0 ? next >= side->limit : next <= side->limit;
            if (beyond) next = 0.5 * (side->x + side->limit);
            if (next == side->x) {
                side->alive = false;
                continue;
            }
            const auto fn = safe(next);
            if (!fn) {
                side->alive = false;
                continue;
            }
            if (*fn == 0.0 || opposite_signs(*fn, side->fx)) {
                return side->step > 0 ? Bracket{side->x, next, side->fx, *fn} : Bracket{next, side->x, *fn, side->fx};
            }
            side->x = next;
            side->fx = *fn;
            side->step *= 2.0;
        }
    }
    return std::nullopt;
}

}  // namespace thermocurv::roots
