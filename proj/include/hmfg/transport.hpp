#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "hmfg/grid.hpp"

namespace hmfg {

// One time slice of a grid density with node spacing dq (state origin 0).
struct GridSlice {
    std::span<const double> values;
    double dq = 1.0;
};

// Finite weighted point set; weights need not be normalised.
struct Discrete {
    std::vector<double> points;
    std::vector<double> weights;  // empty means equal weights

    static Discrete dirac(double x) { return {{x}, {}}; }
};

using Distribution = std::variant<GridSlice, Discrete>;

struct QuantileTable {
    std::vector<double> probabilities;
    std::vector<double> values;
};

// Cumulative trapezoid CDF at the grid nodes, F(0) = 0 and F(q_max) = 1.
std::vector<double> cdf_from_density(const Density& d, int time_index);
std::vector<double> cdf_nodes(GridSlice s);

// Inverse of the piecewise-linear CDF; flat stretches resolve to their left end.
double inverse_cdf(std::span<const double> cdf, double dq, double u);

// Quantiles at the n mid-point probabilities (m + 1/2)/n.
QuantileTable quantile_table(GridSlice s, int n_mesh);

// Wasserstein distances in one dimension. Grid-vs-grid uses the n_q-point
// quantile mesh; anything involving a discrete distribution is integrated
// exactly over the merged quantile breakpoints.
double w2_1d(const Distribution& a, const Distribution& b);
double w1_1d(const Distribution& a, const Distribution& b);

// Average pairwise W2 over types at one time slice; 0 for a single type.
double heterogeneity_measure(const std::vector<Density>& densities, int time_index);
double heterogeneity_measure(const std::vector<Distribution>& dists);
// Time average of heterogeneity_measure over every stored slice.
double heterogeneity_measure_time_avg(const std::vector<const Density*>& densities);

struct RateRow {
    int n = 0;
    double mean_w1 = 0, mean_w2 = 0, std_w1 = 0, std_w2 = 0;
    int trials = 0;
    std::uint64_t seed = 0;
};

// Mean W1/W2 between n-point empirical samples (inverse-CDF draws from the
// base distribution) and the base distribution itself.
std::vector<RateRow> empirical_rate_experiment(const Distribution& base, const std::vector<int>& sample_sizes,
                                               int trials, std::uint64_t rng_seed);

}  // namespace hmfg
