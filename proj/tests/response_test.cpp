#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "test_support.hpp"
#include "thermocurv/catalog.hpp"
#include "thermocurv/response.hpp"

namespace thermocurv {
namespace {

using testing::close_rel;

const CatalogEntry& rn() {
    static const CatalogEntry e = reissner_nordstrom();
    return e;
}
const CatalogEntry& kerr_entry() {
    static const CatalogEntry e = kerr();
    return e;
}

ResponseSet responses(const CatalogEntry& e, StatePoint p) { return responses_at(eval_jet(e.spec, p), p); }

/// Responses rebuilt from a finite-difference Hessian of the scalar potential.
ResponseSet fd_responses(const CatalogEntry& e, StatePoint p) {
    auto m = [&](double s, double x) { return eval_scalar(e.spec, {s, x}); };
    Jet3 j;
    j.v = m(p.s, p.x);
    j.d1 = {testing::fd_partial(m, p, 1, 0), testing::fd_partial(m, p, 0, 1)};
    j.d2 = {testing::fd_partial(m, p, 2, 0), testing::fd_partial(m, p, 1, 1), testing::fd_partial(m, p, 0, 2)};
    return responses_at(j, p);
}

StatePoint random_regular_point(const CatalogEntry& e, std::mt19937_64& g) {
    for (;;) {
        const StatePoint p{testing::log_uniform(g, e.default_grid[0].lo, e.default_grid[0].hi),
                           testing::log_uniform(g, e.default_grid[1].lo, e.default_grid[1].hi)};
        if (!e.valid(p)) continue;
        if (std::abs(e.reference_f(p)) < 0.05 * std::max(1.0, std::abs(e.reference_f({p.s, 0.0})))) continue;
        return p;
    }
}

TEST(Responses, QuadraticPotential) {
    const auto q = quadratic_toy();
    const auto r = responses(q, {1.0, 2.0});
    EXPECT_EQ(r.t, 1.0);
    EXPECT_EQ(r.y, 2.0);
    EXPECT_EQ(r.c_x, 1.0);
    EXPECT_EQ(r.c_y, 1.0);
    EXPECT_EQ(r.kappa_s, 0.5);  // 1/(X M_XX) with Y = dM/dX
    EXPECT_EQ(r.kappa_t, 0.5);
    EXPECT_EQ(r.alpha, 0.0);
    EXPECT_EQ(r.gamma, 1.0);
    EXPECT_FALSE(r.flags.any());

    for (auto* check : {&check_identity_1, &check_identity_2, &check_identity_3}) {
        const auto res = check(r);
        EXPECT_TRUE(res.applicable);
        EXPECT_EQ(res.value, 0.0);
    }
}

TEST(Responses, SchwarzschildLimitHeatCapacity) {
    // C_X = T / M_SS = 0.25 / (-0.125) at S = 1, Q -> 0.
    const Jet3 m = eval_jet(rn().spec, {1.0, 0.0});
    EXPECT_DOUBLE_EQ(m.d1[0] / m.ss(), -2.0);
    const auto r = responses(rn(), {1.0, 1e-9});
    EXPECT_NEAR(r.c_x, -2.0, 1e-12);

    // Oracle: C_X = T (dS/dT)_Q from the closed-form T(S) = (S - Q^2)/(4 S^{3/2}).
    auto temperature = [](double s, double q) { return (s - q * q) / (4 * std::pow(s, 1.5)); };
    const double dt_ds = testing::fd_partial(temperature, {1.0, 0.0}, 1, 0);
    EXPECT_NEAR(temperature(1.0, 0.0) / dt_ds, -2.0, 1e-9);

    // Response functions need X > 0.
    EXPECT_THROW(responses(rn(), {1.0, 0.0}), DomainError);
    EXPECT_THROW(responses(rn(), {1.0, -0.5}), DomainError);
}

TEST(Responses, DaviesPointFlags) {
    const auto r = responses(rn(), {3.0, 1.0});
    EXPECT_TRUE(r.flags.has(Flag::div_cx));
    EXPECT_TRUE(r.flags.has(Flag::zero_kappa_t));
    EXPECT_FALSE(r.flags.has(Flag::div_cy));
    EXPECT_LT(std::abs(r.kappa_t), 1e-12);
    EXPECT_TRUE(std::isfinite(r.c_y));
    EXPECT_TRUE(std::isfinite(r.alpha));
    EXPECT_FALSE(check_identity_1(r).applicable);
    EXPECT_FALSE(check_identity_3(r).applicable);
}

TEST(Responses, NegativeTemperatureIsFlagged) {
    const auto r = responses(rn(), {0.5, 1.0});  // S < Q^2
    EXPECT_LT(r.t, 0.0);
    EXPECT_TRUE(r.flags.has(Flag::neg_t));
    EXPECT_EQ(r.flags.joined().find("neg:T") != std::string::npos, true);
}

TEST(Responses, AllSingularHessianThrows) {
    Jet3 m;
    m.v = 1.0;
    m.d1 = {1.0, 1.0};
    EXPECT_THROW(responses_at(m, {1.0, 1.0}), SolverError);
}

TEST(Responses, MatchFiniteDifferenceOracle) {
    for (const auto& [e, p] : {std::pair{&rn(), StatePoint{1.0, 0.5}}, std::pair{&kerr_entry(), StatePoint{25.0, 1.0}}}) {
        const auto exact = responses(*e, p);
        const auto fd = fd_responses(*e, p);
        EXPECT_TRUE(close_rel(exact.c_x, fd.c_x, 1e-6));
        EXPECT_TRUE(close_rel(exact.c_y, fd.c_y, 1e-6));
        EXPECT_TRUE(close_rel(exact.alpha, fd.alpha, 1e-6));
        EXPECT_TRUE(close_rel(exact.kappa_t, fd.kappa_t, 1e-6));
        EXPECT_TRUE(close_rel(exact.kappa_s, fd.kappa_s, 1e-6));

        // The identities hold for the oracle as well, to its own accuracy.
        EXPECT_LT(std::abs(check_identity_1(fd).value), 1e-6);
        EXPECT_LT(std::abs(check_identity_2(fd).value), 1e-6);
        EXPECT_LT(std::abs(check_identity_3(fd).value), 1e-6);
    }
}

TEST(Identities, ExamplePoints) {
    for (const auto& [e, p] : {std::pair{&rn(), StatePoint{1.0, 0.5}}, std::pair{&kerr_entry(), StatePoint{25.0, 1.0}}}) {
        const auto r = responses(*e, p);
        for (const auto& res : {check_identity_1(r), check_identity_2(r), check_identity_3(r)}) {
            EXPECT_TRUE(res.applicable);
            EXPECT_LT(std::abs(res.value), 1e-10) << e->spec.name();
        }
    }
}

TEST(Identities, RandomPoints) {
    auto g = testing::rng(71);
    const CatalogEntry q = quadratic_toy();
    for (const auto* e : {&rn(), &kerr_entry(), &q}) {
        for (int i = 0; i < 100; ++i) {
            const StatePoint p = random_regular_point(*e, g);
            const auto r = responses(*e, p);
            for (const auto& res : {check_identity_1(r), check_identity_2(r), check_identity_3(r)}) {
                ASSERT_TRUE(res.applicable);
                EXPECT_LT(std::abs(res.value), 1e-9) << e->spec.name() << " at " << p.s << "," << p.x;
            }
            EXPECT_TRUE(close_rel(r.gamma, r.c_y / r.c_x, 1e-12));
            EXPECT_TRUE(close_rel(r.gamma, r.kappa_t / r.kappa_s, 1e-12));
            const Jet3 m = eval_jet(e->spec, p);
            EXPECT_TRUE(close_rel(r.c_x, m.d1[0] / m.ss(), 1e-15));
            EXPECT_TRUE(close_rel(r.kappa_s, 1.0 / (p.x * m.xx()), 1e-15));
        }
    }
}

TEST(MetricFromResponses, ReproducesHessian) {
    const StatePoint p{1.0, 0.5};
    const Jet3 m = eval_jet(rn().spec, p);
    const auto g = metric_in_responses(responses_at(m, p), p);
    const auto h = metric_M(m);
    EXPECT_TRUE(close_rel(g.g11, h.g11, 1e-10));
    // The cross term carries M_SX with its sign.
    EXPECT_TRUE(close_rel(g.g12, h.g12, 1e-10));
    EXPECT_TRUE(close_rel(g.g22, h.g22, 1e-10));

    const auto r = responses_at(m, p);
    EXPECT_TRUE(close_rel(r.t / (p.x * r.kappa_t * r.c_x), h.det(), 1e-10));

    const auto q = quadratic_toy();
    const auto gq = metric_in_responses(responses(q, {1.0, 2.0}), {1.0, 2.0});
    EXPECT_DOUBLE_EQ(gq.g11, 1.0);
    EXPECT_EQ(gq.g12, 0.0);
    EXPECT_DOUBLE_EQ(gq.g22, 1.0);

    EXPECT_THROW(metric_in_responses(responses(rn(), {3.0, 1.0}), {3.0, 1.0}), DomainError);
}

TEST(MetricFromResponses, CrossTermSignOverRandomPoints) {
    auto g = testing::rng(73);
    for (const auto* e : {&rn(), &kerr_entry()}) {
        for (int i = 0; i < 50; ++i) {
            const StatePoint p = random_regular_point(*e, g);
            const Jet3 m = eval_jet(e->spec, p);
            const auto gr = metric_in_responses(responses_at(m, p), p);
            EXPECT_TRUE(close_rel(gr.g12, m.sx(), 1e-10)) << gr.g12 << " vs " << m.sx();
        }
    }
}

TEST(Determinants, RelationsOnRandomPoints) {
    auto g = testing::rng(79);
    for (const auto* e : {&rn(), &kerr_entry()}) {
        for (int i = 0; i < 100; ++i) {
            const StatePoint p = random_regular_point(*e, g);
            const Jet3 m = eval_jet(e->spec, p);
            const auto r = responses_at(m, p);
            const auto d = check_determinants(m, r);
            ASSERT_TRUE(d.applicable);
            EXPECT_LT(d.max(), 1e-9) << e->spec.name();
            // det g^F = -gamma det g^M, geometry side
            const auto c = curvature_from_M_jet(m);
            EXPECT_TRUE(close_rel(c.det_gf, -r.gamma * c.det_gm, 1e-10));
        }
    }
}

TEST(Determinants, BehaviourApproachingDaviesLine) {
    // Along Q = 1 towards S = 3 with f = S - 3 halving each step.
    std::vector<double> det_gm, det_gf, product, x_det_over_t;
    for (int k = 0; k <= 12; ++k) {
        const double f = 0.1 * std::pow(0.5, k);
        const StatePoint p{3.0 + f, 1.0};
        const Jet3 m = eval_jet(rn().spec, p);
        const auto r = responses_at(m, p);
        const auto c = curvature_from_M_jet(m);
        det_gm.push_back(c.det_gm);
        det_gf.push_back(c.det_gf);
        product.push_back(std::abs(c.det_gf) * std::abs(r.c_x));
        x_det_over_t.push_back(p.x * c.det_gm / r.t);
    }
    // det g^M tends to a finite, nonzero limit: -M_SX^2 = -1/108 at (3, 1).
    EXPECT_TRUE(close_rel(det_gm.back(), -1.0 / 108.0, 1e-3));
    EXPECT_TRUE(close_rel(det_gm.back(), det_gm[det_gm.size() - 2], 1e-2));
    // ... proportional to T/X.
    EXPECT_TRUE(close_rel(x_det_over_t.back(), x_det_over_t[x_det_over_t.size() - 2], 1e-2));
    // det g^F -> 0 monotonically as 1/C_X.
    for (std::size_t i = 1; i < det_gf.size(); ++i) EXPECT_LT(std::abs(det_gf[i]), std::abs(det_gf[i - 1]));
    for (double v : product) EXPECT_TRUE(close_rel(v, product.back(), 0.1));
}

}  // namespace
}  // namespace thermocurv
