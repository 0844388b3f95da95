#pragma once

/**
 * Third-order Taylor jets in two variables.
 *
 * A Jet3 holds the value of a quantity together with all of its partial
 * derivatives up to third order with respect to the two state coordinates
 * (S, X). Arithmetic and elementary functions propagate the coefficients
 * exactly (Leibniz rule for products, Faa di Bruno for compositions), so a
 * potential evaluated on seeded variable jets yields its exact Hessian and
 * third derivatives.
 *
 * Coefficient layout: because there are only two variables, a mixed partial
 * is identified by how many X-derivatives it contains. Hence
 *   d1[i]       = d/dx_i
 *   d2[i+j]     = d2/dx_i dx_j        (SS, SX, XX)
 *   d3[i+j+k]   = d3/dx_i dx_j dx_k   (SSS, SSX, SXX, XXX)
 */

#include <array>
#include <cmath>

#include "thermocurv/errors.hpp"

namespace thermocurv {

struct Jet3 {
    double v = 0.0;
    std::array<double, 2> d1{};
    std::array<double, 3> d2{};
    std::array<double, 4> d3{};
    /// Set when some division on the way had a denominator below the
    /// conditioning threshold.
    bool near_singular = false;

    static constexpr Jet3 constant(double value) { return Jet3{value, {}, {}, {}, false}; }

    /// Seeds coordinate `index` (0 = S, 1 = X) at `value`.
    static constexpr Jet3 variable(int index, double value) {
        Jet3 j = constant(value);
        j.d1[index == 0 ? 0 : 1] = 1.0;
        return j;
    }

    constexpr double ss() const { return d2[0]; }
    constexpr double sx() const { return d2[1]; }
    constexpr double xx() const { return d2[2]; }
    constexpr double sss() const { return d3[0]; }
    constexpr double ssx() const { return d3[1]; }
    constexpr double sxx() const { return d3[2]; }
    constexpr double xxx() const { return d3[3]; }
};

inline constexpr Jet3 jet_var(int index, double value) { return Jet3::variable(index, value); }

struct DivisionPolicy {
    double floor = 1e-300;
    double warn = 1e-12;
};

inline Jet3 operator-(const Jet3& a) {
    Jet3 r;
    r.v = -a.v;
    for (std::size_t i = 0; i < 2; ++i) r.d1[i] = -a.d1[i];
    for (std::size_t i = 0; i < 3; ++i) r.d2[i] = -a.d2[i];
    for (std::size_t i = 0; i < 4; ++i) r.d3[i] = -a.d3[i];
    r.near_singular = a.near_singular;
    return r;
}

inline Jet3 operator+(const Jet3& a, const Jet3& b) {
    Jet3 r;
    r.v = a.v + b.v;
    for (std::size_t i = 0; i < 2; ++i) r.d1[i] = a.d1[i] + b.d1[i];
    for (std::size_t i = 0; i < 3; ++i) r.d2[i] = a.d2[i] + b.d2[i];
    for (std::size_t i = 0; i < 4; ++i) r.d3[i] = a.d3[i] + b.d3[i];
    r.near_singular = a.near_singular || b.near_singular;
    return r;
}

inline Jet3 operator-(const Jet3& a, const Jet3& b) { return a + (-b); }

inline Jet3 operator*(const Jet3& a, const Jet3& b) {
    Jet3 r;
    r.v = a.v * b.v;
    for (int i = 0; i < 2; ++i) r.d1[i] = a.d1[i] * b.v + a.v * b.d1[i];
    for (int i = 0; i < 2; ++i) {
        for (int j = i; j < 2; ++j) {
            r.d2[i + j] = a.d2[i + j] * b.v + a.d1[i] * b.d1[j] + a.d1[j] * b.d1[i] + a.v * b.d2[i + j];
        }
    }
    for (int i = 0; i < 2; ++i) {
        for (int j = i; j < 2; ++j) {
            for (int k = j; k < 2; ++k) {
                r.d3[i + j + k] = a.d3[i + j + k] * b.v                                          //
                                  + a.d2[i + j] * b.d1[k] + a.d2[i + k] * b.d1[j] + a.d2[j + k] * b.d1[i]  //
                                  + a.d1[i] * b.d2[j + k] + a.d1[j] * b.d2[i + k] + a.d1[k] * b.d2[i + j]  //
                                  + a.v * b.d3[i + j + k];
            }
        }
    }
    r.near_singular = a.near_singular || b.near_singular;
    return r;
}

/// Applies a univariate function given its value and first three derivatives
/// at a.v.
inline Jet3 compose(const Jet3& a, double f0, double f1, double f2, double f3) {
    Jet3 r;
    r.v = f0;
    for (int i = 0; i < 2; ++i) r.d1[i] = f1 * a.d1[i];
    for (int i = 0; i < 2; ++i) {
        for (int j = i; j < 2; ++j) r.d2[i + j] = f2 * a.d1[i] * a.d1[j] + f1 * a.d2[i + j];
    }
    for (int i = 0; i < 2; ++i) {
        for (int j = i; j < 2; ++j) {
            for (int k = j; k < 2; ++k) {
                r.d3[i + j + k] = f3 * a.d1[i] * a.d1[j] * a.d1[k]
                                  + f2 * (a.d2[i + j] * a.d1[k] + a.d2[i + k] * a.d1[j] + a.d2[j + k] * a.d1[i])
                                  + f1 * a.d3[i + j + k];
            }
        }
    }
    r.near_singular = a.near_singular;
    return r;
}

inline Jet3 reciprocal(const Jet3& a, DivisionPolicy policy = {}) {
    if (!(std::abs(a.v) >= policy.floor)) throw DivisionByZero(a.v);
    const double inv = 1.0 / a.v;
    Jet3 r = compose(a, inv, -inv * inv, 2.0 * inv * inv * inv, -6.0 * inv * inv * inv * inv);
    if (std::abs(a.v) < policy.warn) r.near_singular = true;
    return r;
}

inline Jet3 divide(const Jet3& a, const Jet3& b, DivisionPolicy policy = {}) {
    Jet3 r = a * reciprocal(b, policy);
    r.v = a.v / b.v;  // keep the value slot bit-identical to scalar evaluation
    return r;
}

inline Jet3 operator/(const Jet3& a, const Jet3& b) { return divide(a, b); }

inline Jet3& operator+=(Jet3& a, const Jet3& b) { return a = a + b; }
inline Jet3& operator-=(Jet3& a, const Jet3& b) { return a = a - b; }
inline Jet3& operator*=(Jet3& a, const Jet3& b) { return a = a * b; }
inline Jet3& operator/=(Jet3& a, const Jet3& b) { return a = a / b; }

inline Jet3 sqrt(const Jet3& a) {
    if (!(a.v > 0.0)) throw DomainError("sqrt", a.v);
    const double r = std::sqrt(a.v);
    return compose(a, r, 0.5 / r, -0.25 / (r * a.v), 0.375 / (r * a.v * a.v));
}

inline Jet3 exp(const Jet3& a) {
    const double e = std::exp(a.v);
    return compose(a, e, e, e, e);
}

inline Jet3 log(const Jet3& a) {
    if (!(a.v > 0.0)) throw DomainError("ln", a.v);
    const double inv = 1.0 / a.v;
    return compose(a, std::log(a.v), inv, -inv * inv, 2.0 * inv * inv * inv);
}

/// Integer power by repeated squaring; negative exponents go through the
/// reciprocal. Valid for any sign of the base.
inline Jet3 pow_int(const Jet3& a, long long n) {
    if (n < 0) return reciprocal(pow_int(a, -n));
    Jet3 result = Jet3::constant(1.0);
    Jet3 base = a;
    while (n > 0) {
        if (n & 1) result = result * base;
        n >>= 1;
        if (n > 0) base = base * base;
    }
    return result;
}

/// Real power. Integer-valued exponents use repeated multiplication, any
/// other exponent is exp(p ln a) and needs a positive base.
inline Jet3 pow(const Jet3& a, double p) {
    if (std::nearbyint(p) == p && std::abs(p) <= 1024.0) return pow_int(a, static_cast<long long>(p));
    if (!(a.v > 0.0)) throw DomainError("pow", a.v);
    return exp(Jet3::constant(p) * log(a));
}

/// Power with a jet-valued exponent.
inline Jet3 pow(const Jet3& a, const Jet3& p) {
    if (!(a.v > 0.0)) throw DomainError("pow", a.v);
    return exp(p * log(a));
}

}  // namespace thermocurv
