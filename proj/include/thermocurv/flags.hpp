#pragma once

#include <cstdint>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

namespace thermocurv {

/// Diagnostic conditions attached to computed quantities. Divergences are
/// results, not errors: values are still reported and the flag marks them.
enum class Flag : std::uint32_t {
    div_rm = 1u << 0,
    div_rf = 1u << 1,
    div_cx = 1u << 2,
    div_cy = 1u << 3,
    div_alpha = 1u << 4,
    div_kappa_t = 1u << 5,
    div_kappa_s = 1u << 6,
    zero_kappa_t = 1u << 7,
    zero_kappa_s = 1u << 8,
    neg_t = 1u << 9,
    ill_conditioned = 1u << 10,
    err_domain = 1u << 11,
    err_x = 1u << 12,
    err_hessian = 1u << 13,
    err_legendre = 1u << 14,
};

class Flags {
public:
    constexpr Flags() = default;

    constexpr Flags& set(Flag f, bool on = true) {
        if (on) bits_ |= static_cast<std::uint32_t>(f);
        return *this;
    }
    constexpr bool has(Flag f) const { return (bits_ & static_cast<std::uint32_t>(f)) != 0; }
    constexpr bool any() const { return bits_ != 0; }
    constexpr std::uint32_t bits() const { return bits_; }

    constexpr Flags& operator|=(Flags other) {
        bits_ |= other.bits_;
        return *this;
    }
    friend constexpr Flags operator|(Flags a, Flags b) { return a |= b; }
    friend constexpr bool operator==(Flags, Flags) = default;

    /// Tokens in a fixed order, e.g. {"div:CX", "neg:T"}.
    std::vector<std::string> tokens() const {
        static constexpr std::pair<Flag, const char*> names[] = {
            {Flag::div_rm, "div:RM"},          {Flag::div_rf, "div:RF"},
            {Flag::div_cx, "div:CX"},          {Flag::div_cy, "div:CY"},
            {Flag::div_alpha, "div:alpha"},    {Flag::div_kappa_t, "div:kappaT"},
            {Flag::div_kappa_s, "div:kappaS"}, {Flag::zero_kappa_t, "zero:kappaT"},
            {Flag::zero_kappa_s, "zero:kappaS"}, {Flag::neg_t, "neg:T"},
            {Flag::ill_conditioned, "cond:jet"}, {Flag::err_domain, "err:domain"},
            {Flag::err_x, "err:x"},            {Flag::err_hessian, "err:hessian"},
            {Flag::err_legendre, "err:legendre"},
        };
        std::vector<std::string> out;
        for (const auto& [flag, name] : names) {
            if (has(flag)) out.emplace_back(name);
        }
        return out;
    }

    std::string joined(char sep = ';') const {
        std::string s;
        for (const auto& t : tokens()) {
            if (!s.empty()) s += sep;
            s += t;
        }
        return s;
    }

private:
    std::uint32_t bits_ = 0;
};

/// Threshold for structural denominators: a denominator d is treated as
/// singular when |d| < singular_eps * local_scale.
struct Tolerances {
    double singular_eps = 1e-10;

    /// Defaults, with THERMOCURV_EPS overriding singular_eps when it parses
    /// as a positive number.
    static Tolerances from_environment() {
        Tolerances t;
        if (const char* env = std::getenv("THERMOCURV_EPS")) {
            char* end = nullptr;
            const double v = std::strtod(env, &end);
            if (end != env && *end == '\0' && v > 0.0) t.singular_eps = v;
        }
        return t;
    }
};

}  // namespace thermocurv
