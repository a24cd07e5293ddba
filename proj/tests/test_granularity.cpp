#include <gtest/gtest.h>

#include <cmath>

#include "hmfg/errors.hpp"
#include "hmfg/granularity.hpp"

using namespace hmfg;

namespace {
const ErrorModelParams P{};
const std::vector<double> kBalanced{1.0};
}  // namespace

TEST(ReducedError, ReferenceValues) {
    EXPECT_NEAR(reduced_error(1000, 6, P), 0.4886 / 6 + 2 * std::sqrt(0.006), 1e-12);
    EXPECT_NEAR(reduced_error(1000, 6, P), 0.2363, 5e-4);
    EXPECT_NEAR(reduced_error(200, 1, P), 0.6300, 5e-4);
    EXPECT_NEAR(reduced_error(10000, 13, P), 0.10970, 5e-5);
}

TEST(ReducedError, SingleTermDegeneration) {
    ErrorModelParams p = P;
    p.c1 = 0;
    p.c3 = 0;
    EXPECT_DOUBLE_EQ(reduced_error(500, 7, p), 2.0 * std::pow(7.0 / 500.0, 0.5));
    EXPECT_THROW(reduced_error(500, 0, P), DomainError);
}

TEST(ContinuousKstar, ReferenceValues) {
    EXPECT_NEAR(continuous_kstar(1000, P), std::pow(0.4886, 2.0 / 3.0) * 10, 1e-12);
    EXPECT_NEAR(continuous_kstar(1000, P), 6.20, 0.01);
    EXPECT_NEAR(continuous_kstar(10000, P), 13.36, 0.01);
    EXPECT_NEAR(continuous_kstar(200, P), 3.63, 0.01);
}

TEST(ContinuousKstar, UnitPrefactor) {
    ErrorModelParams p = P;
    p.c1 = p.alpha * p.c2 / p.beta_exp;
    for (double n : {100.0, 777.0, 1e5}) EXPECT_NEAR(continuous_kstar(n, p), std::cbrt(n), 1e-12 * std::cbrt(n));
}

TEST(MinError, ReferenceValues) {
    EXPECT_NEAR(min_error(1000, P), 0.2363, 5e-4);
    EXPECT_NEAR(min_error(200, P), 0.4040, 5e-4);
}

TEST(MinError, ExactPowerLawSlope) {
    // E* = c n^(-alpha beta / (alpha + beta)); the slope oracle is a finite difference of ln E*.
    std::vector<std::pair<double, double>> pts;
    for (double n = 100; n <= 1e5; n *= 2) pts.emplace_back(n, min_error(n, P));
    const double expected = -P.alpha * P.beta_exp / (P.alpha + P.beta_exp);
    EXPECT_NEAR(fit_loglog_slope(pts).slope, expected, 1e-6);
    const double fd = (std::log(min_error(2000, P)) - std::log(min_error(1000, P))) / std::log(2.0);
    EXPECT_NEAR(fd, expected, 1e-9);
}

TEST(DimensionExponents, Sequence) {
    auto [a1, g1] = dimension_exponents(1);
    EXPECT_DOUBLE_EQ(a1, 0.5);
    EXPECT_NEAR(g1, 1.0 / 3, 1e-15);
    auto [a2, g2] = dimension_exponents(2);
    EXPECT_DOUBLE_EQ(a2, 0.25);
    EXPECT_NEAR(g2, 0.2, 1e-15);
    auto [a3, g3] = dimension_exponents(3);
    EXPECT_NEAR(a3, 0.2, 1e-15);
    EXPECT_NEAR(g3, 1.0 / 6, 1e-15);
    EXPECT_THROW(dimension_exponents(0), DomainError);
}

TEST(HeterogeneityAdjusted, Reductions) {
    EXPECT_EQ(kstar_heterogeneity_adjusted(1000, 0.0, 1.0, P), 0.0);
    EXPECT_NEAR(kstar_heterogeneity_adjusted(1000, 0.4, 1.0, P) / kstar_heterogeneity_adjusted(1000, 0.2, 1.0, P),
                std::pow(2.0, 2.0 / 3.0), 1e-12);
    EXPECT_NEAR(kstar_heterogeneity_adjusted(1000, 0.4886, 1.0, P), continuous_kstar(1000, P), 1e-12);
}

TEST(Unbalanced, Ratios) {
    EXPECT_NEAR(kstar_unbalanced(1000, 1.0, P), continuous_kstar(1000, P), 1e-12);
    for (double n : {200.0, 1000.0, 1e4, 1e5})
        EXPECT_NEAR(kstar_unbalanced(n, 0.1, P) / continuous_kstar(n, P), std::cbrt(0.1), 1e-12);
    EXPECT_NEAR(kstar_unbalanced(1000, 0.1, P), std::pow(0.4886, 2.0 / 3.0) * std::cbrt(100.0), 1e-12);
    EXPECT_NEAR(kstar_unbalanced(1000, 0.1, P), 2.88, 2e-3);
    EXPECT_THROW(kstar_unbalanced(1000, 0.0, P), DomainError);
    EXPECT_THROW(kstar_unbalanced(1000, 1.5, P), DomainError);
}

TEST(LeoDelta, ZeroLinearAndCalibrated) {
    EXPECT_EQ(leo_delta(0.0, 0.06, 60, 13.914), 0.0);
    EXPECT_NEAR(leo_delta(0.1, 0.06, 60, 13.914), 2 * leo_delta(0.05, 0.06, 60, 13.914), 1e-15);
    EXPECT_NEAR(leo_delta(0.05, 0.06, 60, LeoSelection{}.c_leo), 0.022, 1e-5);
    EXPECT_THROW(leo_delta(0.05, 0.06, 0.0, 1.0), DomainError);
}

TEST(SelectTypeCount, Examples) {
    EXPECT_EQ(select_type_count(1000, kBalanced, P).k_star, 6);
    LeoSelection fast;
    fast.delta_phi = 0.05;
    EXPECT_EQ(select_type_count(10000, kBalanced, P, fast).k_star, 14);
    EXPECT_EQ(select_type_count(10000, kBalanced, P).k_star, 13);
    EXPECT_EQ(select_type_count(4, kBalanced, P).k_star, 2);
    EXPECT_THROW(select_type_count(100, {}, P), ConfigError);
}

TEST(SelectTypeCount, UnbalancedUsesSmallestClass) {
    auto r = select_type_count(1000, {0.7, 0.2, 0.1}, P);
    EXPECT_DOUBLE_EQ(r.n_effective, 100.0);
    EXPECT_NEAR(r.k_continuous, continuous_kstar(100, P), 1e-12);
    // Unbalanced means lambda_min < 1/K, so a 40/30/30 split already counts.
    EXPECT_DOUBLE_EQ(select_type_count(1000, {0.4, 0.3, 0.3}, P).n_effective, 300.0);
    EXPECT_DOUBLE_EQ(select_type_count(1000, {0.5, 0.5}, P).n_effective, 1000.0);
}

TEST(SelectTypeCount, ClampInvariant) {
    for (int n = 1; n <= 5000; n += 37) {
        const int k = select_type_count(n, kBalanced, P).k_star;
        const int cap = static_cast<int>(std::floor(std::sqrt(n)));
        if (cap >= 2) {
            EXPECT_GE(k, 2);
            EXPECT_LE(k, cap);
        } else {
            EXPECT_EQ(k, std::max(1, cap));
        }
    }
}

TEST(Exhaustive, Examples) {
    EXPECT_EQ(exhaustive_kstar(1000, 1, 20, P), 6);
    EXPECT_EQ(exhaustive_kstar(200, 1, 20, P), 4);
    EXPECT_LT(reduced_error(200, 4, P), reduced_error(200, 3, P));
    EXPECT_NEAR(reduced_error(200, 4, P), 0.4050, 1e-4);
    EXPECT_NEAR(reduced_error(200, 3, P), 0.4078, 1e-4);
    EXPECT_EQ(exhaustive_kstar(1000, 9, 9, P), 9);
}

TEST(Exhaustive, TiesGoToSmallerK) {
    ErrorModelParams flat = P;
    flat.c1 = 0;
    flat.c2 = 0;
    EXPECT_EQ(exhaustive_kstar(1000, 3, 8, flat), 3);
}

TEST(FitSlope, ExactPowerLaws) {
    std::vector<std::pair<double, double>> pts;
    for (double x : {1.0, 4.0, 9.0, 100.0}) pts.emplace_back(x, 2 * std::sqrt(x));
    SlopeFit f = fit_loglog_slope(pts);
    EXPECT_NEAR(f.slope, 0.5, 1e-12);
    EXPECT_NEAR(f.intercept, std::log(2.0), 1e-12);
    EXPECT_NEAR(f.stderr_slope, 0.0, 1e-12);

    pts.clear();
    for (int i = 0; i < 20; ++i) {
        const double x = std::pow(10.0, 2 + 3.0 * i / 19);
        pts.emplace_back(x, 1.7 * std::cbrt(x));
    }
    EXPECT_NEAR(fit_loglog_slope(pts).slope, 1.0 / 3, 1e-12);
    EXPECT_THROW(fit_loglog_slope({{1, 1}, {2, 2}}), DomainError);
    EXPECT_THROW(fit_loglog_slope({{1, 1}, {2, 0}, {3, 3}}), DomainError);
}

TEST(Properties, UniqueMinimumAndFirstOrderCondition) {
    for (double n : {100.0, 500.0, 3000.0, 1e5}) {
        const double k = continuous_kstar(n, P);
        const double e = reduced_error(n, k, P);
        for (double eps : {0.01, 0.1, 1.0}) {
            EXPECT_GT(reduced_error(n, k + eps, P), e);
            EXPECT_GT(reduced_error(n, k - eps, P), e);
        }
        const double h = 1e-6 * k;
        const double d = (reduced_error(n, k + h, P) - reduced_error(n, k - h, P)) / (2 * h);
        EXPECT_LE(std::abs(d) / e, 1e-8);
    }
}

TEST(Properties, RoundingIsNearOptimal) {
    for (double n = 100; n <= 1e5; n *= 1.05) {
        const double k = continuous_kstar(n, P);
        EXPECT_LE(reduced_error(n, std::floor(k + 0.5), P) / reduced_error(n, k, P), 1.01) << "n=" << n;
    }
}

TEST(Properties, QiaoTermIsDominated) {
    for (int n : {100, 316, 1000, 3162, 10000, 31623, 100000})
        for (int k = 1; k <= static_cast<int>(std::floor(std::sqrt(n))); ++k) {
            const double nn = n;
            EXPECT_LE(k * k / (nn * nn * nn), std::sqrt(k / nn));
        }
}

TEST(Properties, Monotonicity) {
    double prev = 0;
    for (double n = 10; n < 1e6; n *= 1.7) {
        const double k = continuous_kstar(n, P);
        EXPECT_GT(k, prev);
        prev = k;
    }
    ErrorModelParams bigger = P;
    bigger.c1 *= 1.1;
    EXPECT_GT(continuous_kstar(1000, bigger), continuous_kstar(1000, P));
    EXPECT_GT(kstar_heterogeneity_adjusted(1000, 0.6, 1, P), kstar_heterogeneity_adjusted(1000, 0.5, 1, P));
}
