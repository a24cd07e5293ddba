#include <gtest/gtest.h>

#include <cmath>

#include "hmfg/grid.hpp"
#include "hmfg/stepsize.hpp"
#include "hmfg/transport.hpp"

using namespace hmfg;

TEST(CH, Examples) {
    EXPECT_EQ(compute_c_h(1, 3.0, 2.0, 5.0), 0.0);
    EXPECT_DOUBLE_EQ(compute_c_h(3, 1, 1, 1), 6.0);
    EXPECT_DOUBLE_EQ(compute_c_h(4, 0.7, 0.3, 2.0), 4 * compute_c_h(4, 0.7, 0.3, 1.0));
}

TEST(AdaptStep, HomogeneousReduction) {
    StepSizes s = adapt_step_from(3, 0.0, 10.0, 1.0, 1.0, 0.01, 0.0);
    EXPECT_DOUBLE_EQ(s.product, 0.99);
    EXPECT_NEAR(s.xi, std::sqrt(0.99), 1e-15);
    EXPECT_EQ(s.xi, s.varsigma);
}

TEST(AdaptStep, UnitCouplingHalvesTheProduct) {
    // K = 2, L = T = phi = 1 gives C_H = 2; H_K = 0.5 makes C_H H_K = 1.
    StepSizes s = adapt_step_from(2, 0.5, 1.0, 1.0, 1.0, 0.01, 0.0);
    EXPECT_NEAR(s.c_h * s.h_k, 1.0, 1e-15);
    EXPECT_NEAR(s.product, 0.495, 1e-15);
}

TEST(AdaptStep, SingleTypeIgnoresGradientsAndSnapshots) {
    Grid g = make_grid(20, 5, 10.0, 0.06);
    Density d = constant_in_time(g, truncated_gaussian(g, 5, 1));
    Snapshot a, b;
    a.link_rates = {300};
    b.link_rates = {340};
    StepSizeInputs in;
    in.densities = {&d};
    in.dual_gradients = {1e6};
    in.prev_snapshot = &a;
    in.curr_snapshot = &b;
    in.mu = 0.5;
    StepSizes s = adapt_step(in);
    EXPECT_EQ(s.product, fixed_step(0.99).product);
    EXPECT_EQ(s.xi, fixed_step(0.99).xi);
}

TEST(AdaptStep, LeoTermEntersCH) {
    Grid g = make_grid(20, 5, 10.0, 0.06);
    Density d1 = constant_in_time(g, truncated_gaussian(g, 3, 1));
    Density d2 = constant_in_time(g, truncated_gaussian(g, 7, 1));
    Snapshot a, b;
    a.link_rates = {350};
    b.link_rates = {300};
    StepSizeInputs in;
    in.densities = {&d1, &d2};
    in.dual_gradients = {0.5, 0.8};
    in.lipschitz_l = 2.0;
    in.horizon_t = 0.5;
    StepSizes plain = adapt_step(in);
    in.prev_snapshot = &a;
    in.curr_snapshot = &b;
    in.mu = 0.5;
    StepSizes leo = adapt_step(in);
    const double ds = delta_sat(a, b, 0.5);
    EXPECT_NEAR(leo.delta_sat, ds, 1e-18);
    EXPECT_NEAR(leo.c_h - plain.c_h, 4.0 * 0.5 * 2 * 1 * ds * ds, 1e-15);
    EXPECT_NEAR(plain.c_h, compute_c_h(2, 2.0, 0.5, 0.8), 1e-15);
    EXPECT_NEAR(plain.h_k, heterogeneity_measure_time_avg({&d1, &d2}), 1e-15);
}

TEST(AdaptStep, ProductDecreasesInHAndCH) {
    double prev = 1.0;
    for (double h = 0.0; h < 5; h += 0.25) {
        const double p = adapt_step_from(3, h, 1.0, 1.0, 1.0, 0.01, 0.0).product;
        EXPECT_LT(p, prev);
        prev = p;
    }
    prev = 1.0;
    for (double phi = 0.1; phi < 5; phi += 0.3) {
        const double p = adapt_step_from(3, 0.5, phi, 1.0, 1.0, 0.01, 0.0).product;
        EXPECT_LT(p, prev);
        prev = p;
    }
}

TEST(AdaptStep, ConstructionInvariants) {
    for (int k = 1; k <= 6; ++k)
        for (double h : {0.0, 0.1, 1.0, 7.0}) {
            StepSizes s = adapt_step_from(k, h, 0.9, 0.35, 1.0, 0.01, 1e-4);
            EXPECT_NEAR(s.xi * s.varsigma, s.product, 1e-14);
            EXPECT_EQ(s.xi, s.varsigma);
            EXPECT_LT(s.product, 1.0);
            EXPECT_TRUE(check_sufficient_condition(s.xi, s.varsigma, s.c_h, s.h_k));
            EXPECT_NEAR(s.product * (1 + s.c_h * s.h_k), 0.99, 1e-12);
        }
}

TEST(SufficientCondition, Examples) {
    const double r = std::sqrt(0.99);
    EXPECT_FALSE(check_sufficient_condition(r, r, 0.5, 1.0));
    EXPECT_TRUE(check_sufficient_condition(r, r, 3.0, 0.0));
}

TEST(DualGradient, CentredDifferenceSup) {
    Grid g = make_grid(11, 2, 1.0, 1.0);
    Field phi(g);
    for (int j = 0; j < g.slices(); ++j)
        for (int i = 0; i < g.n_q; ++i) phi(i, j) = (j + 1) * g.q(i) * g.q(i);
    // Centred difference of 3 q^2 is exact: 6 q, largest at the last interior node q = 0.9.
    EXPECT_NEAR(dual_gradient_sup(phi), 6 * 0.9, 1e-12);
}
