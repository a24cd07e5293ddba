#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hmfg/errors.hpp"
#include "hmfg/grid.hpp"
#include "hmfg/params.hpp"

using namespace hmfg;

TEST(Grid, DefaultSpacings) {
    Grid g = make_grid(50, 60, 10.0, 0.06);
    EXPECT_NEAR(g.dq, 10.0 / 49.0, 1e-15);
    EXPECT_NEAR(g.dt, 0.001, 1e-15);
    EXPECT_EQ(g.slices(), 61);
}

TEST(Grid, SmallestLegalGrid) {
    Grid g = make_grid(3, 1, 1.0, 1.0);
    EXPECT_DOUBLE_EQ(g.dq, 0.5);
    EXPECT_DOUBLE_EQ(g.dt, 1.0);
}

TEST(Grid, HandArithmetic) {
    Grid g = make_grid(11, 10, 1.0, 2.0);
    EXPECT_NEAR(g.dq, 0.1, 1e-15);
    EXPECT_NEAR(g.dt, 0.2, 1e-15);
    EXPECT_DOUBLE_EQ(g.q(10), 1.0);
}

TEST(Grid, RejectsBadArguments) {
    EXPECT_THROW(make_grid(2, 10, 1.0, 1.0), ConfigError);
    EXPECT_THROW(make_grid(10, 0, 1.0, 1.0), ConfigError);
    EXPECT_THROW(make_grid(10, 10, -1.0, 1.0), ConfigError);
    EXPECT_THROW(make_grid(10, 10, 1.0, 0.0), ConfigError);
}

TEST(Grid, CoordinateRoundTrip) {
    for (Grid g : {make_grid(50, 60, 10.0, 0.06), make_grid(3, 1, 1.0, 1.0), make_grid(997, 2, 7.3, 1.0)})
        for (int i = 0; i < g.n_q; ++i) EXPECT_EQ(g.nearest_index(g.q(i)), i);
}

TEST(Normalize, UniformSliceHasUnitMass) {
    Grid g = make_grid(11, 2, 1.0, 1.0);
    Density d(g, 3.0);
    Density n = normalize_density(d);
    for (int j = 0; j < g.slices(); ++j) {
        EXPECT_NEAR(trapezoid(n.slice(j), g.dq), 1.0, 1e-12);
        for (int i = 0; i < g.n_q; ++i) EXPECT_NEAR(n(i, j), 1.0, 1e-12);
    }
}

TEST(Normalize, ClipsNegatives) {
    Grid g = make_grid(5, 1, 1.0, 1.0);
    Density d(g, 1.0);
    d(2, 0) = -0.1;
    Density n = normalize_density(d);
    EXPECT_EQ(n(2, 0), 0.0);
    EXPECT_NEAR(trapezoid(n.slice(0), g.dq), 1.0, 1e-12);
    EXPECT_NEAR(n(0, 0) / n(1, 0), 1.0, 1e-15);
}

TEST(Normalize, AlreadyNormalisedCentrePeak) {
    Grid g = make_grid(3, 1, 1.0, 1.0);
    Density d(g, 0.0);
    d(1, 0) = d(1, 1) = 2.0;
    Density n = normalize_density(d);
    EXPECT_NEAR(n(1, 0), 2.0, 1e-15);
    EXPECT_EQ(n(0, 0), 0.0);
}

TEST(Normalize, ZeroSliceIsDegenerate) {
    Grid g = make_grid(5, 1, 1.0, 1.0);
    Density d(g, 1.0);
    for (double& v : d.slice(1)) v = 0.0;
    EXPECT_THROW(normalize_density(d), DegenerateDensityError);
}

TEST(Normalize, IdempotentWithTinyMassError) {
    Grid g = make_grid(50, 5, 10.0, 0.06);
    Density d(g);
    for (int j = 0; j < g.slices(); ++j)
        for (int i = 0; i < g.n_q; ++i) d(i, j) = 1.0 + std::sin(0.3 * i + j) * 0.9;
    Density once = normalize_density(d);
    Density twice = normalize_density(once);
    for (std::size_t k = 0; k < once.values.size(); ++k) EXPECT_NEAR(once.values[k], twice.values[k], 1e-14);
    EXPECT_LE(max_mass_error(once), 1e-12);
}

TEST(Simplex, ProjectionIsFeasible) {
    Grid g = make_grid(20, 1, 1.0, 1.0);
    std::vector<double> s(g.n_q);
    for (int i = 0; i < g.n_q; ++i) s[i] = std::cos(0.7 * i) * 2.0;
    project_to_simplex(s, g.dq);
    for (double v : s) EXPECT_GE(v, 0.0);
    EXPECT_NEAR(trapezoid(s, g.dq), 1.0, 1e-12);
}

TEST(Fleet, LargestRemainderSumsToN) {
    for (int n : {1, 7, 100, 333, 1000}) {
        auto c = largest_remainder_counts({0.7, 0.2, 0.1}, n);
        EXPECT_EQ(std::accumulate(c.begin(), c.end(), 0), n);
    }
    auto c = largest_remainder_counts({1.0 / 3, 1.0 / 3, 1.0 / 3}, 10);
    EXPECT_EQ(std::accumulate(c.begin(), c.end(), 0), 10);
    EXPECT_EQ(c[0], 4);
}

TEST(Fleet, ReferenceTypesFollowAnchorWeights) {
    EXPECT_DOUBLE_EQ(reference_type(0.0).beta1, 0.5);
    EXPECT_DOUBLE_EQ(reference_type(0.5).beta1, 0.7);
    EXPECT_DOUBLE_EQ(reference_type(1.0).beta1, 1.0);
    EXPECT_DOUBLE_EQ(reference_type(0.0).beta2, 1.0);
    EXPECT_DOUBLE_EQ(reference_type(0.5).beta2, 0.8);
    EXPECT_DOUBLE_EQ(reference_type(1.0).beta2, 0.6);
    EXPECT_DOUBLE_EQ(reference_type(0.3).terminal_c, 0.5);
}

TEST(Fleet, ThetaOrderingAndMass) {
    Grid g = make_grid(50, 60, 10.0, 0.06);
    FleetConfig f = make_reference_fleet(g, 100, 4);
    EXPECT_DOUBLE_EQ(f.types.front().theta, 0.0);
    EXPECT_DOUBLE_EQ(f.types.back().theta, 1.0);
    for (int k = 1; k < 4; ++k) EXPECT_GT(f.types[k].theta, f.types[k - 1].theta);
    for (const auto& r : f.rho0) EXPECT_NEAR(trapezoid(r, g.dq), 1.0, 1e-12);
    EXPECT_THROW(make_reference_fleet(g, 100, 3, {0.5, 0.6, -0.1}), ConfigError);
}

TEST(Fleet, MergeUsesPopulationWeightedMeans) {
    Grid g = make_grid(50, 60, 10.0, 0.06);
    FleetConfig f = make_reference_fleet(g, 1000, 3, {0.5, 0.3, 0.2});
    std::vector<int> group;
    FleetConfig m = merge_types(f, 1, &group);
    ASSERT_EQ(m.k_types, 1);
    EXPECT_NEAR(m.types[0].beta1, 0.5 * 0.5 + 0.3 * 0.7 + 0.2 * 1.0, 1e-12);
    EXPECT_EQ(group, (std::vector<int>{0, 0, 0}));
    for (int i = 0; i < g.n_q; ++i)
        EXPECT_NEAR(m.rho0[0][i], 0.5 * f.rho0[0][i] + 0.3 * f.rho0[1][i] + 0.2 * f.rho0[2][i], 1e-12);
}

TEST(Fleet, HeterogeneityScaleKeepsMean) {
    Grid g = make_grid(20, 10, 10.0, 0.06);
    FleetConfig f = make_reference_fleet(g, 100, 3);
    FleetConfig s = scale_heterogeneity(f, 2.0);
    double m0 = 0, m1 = 0;
    for (int k = 0; k < 3; ++k) {
        m0 += f.proportions[k] * f.types[k].beta2;
        m1 += s.proportions[k] * s.types[k].beta2;
    }
    EXPECT_NEAR(m0, m1, 1e-12);
    EXPECT_NEAR(s.types[2].beta2 - s.types[0].beta2, 2.0 * (f.types[2].beta2 - f.types[0].beta2), 1e-12);
}
