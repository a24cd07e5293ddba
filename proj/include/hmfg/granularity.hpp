#pragma once

#include <utility>
#include <vector>

namespace hmfg {

struct ErrorModelParams {
    double c1 = 0.4886;
    double c2 = 2.0;
    double c3 = 0.0;
    double alpha = 0.5;
    double beta_exp = 1.0;
    double delta_init = 0.0;
};

void validate(const ErrorModelParams& p);

struct LeoSelection {
    double delta_phi = 0.0;      // scenario bound on adjacent surcharge change
    double horizon_t = 0.06;     // s
    double delta_tau = 60.0;     // s
    double c_leo = 13.914;       // makes the fast scenario (0.05) give delta_leo = 0.022
};

struct GranularityResult {
    double k_continuous = 0;
    int k_star = 1;
    double n_effective = 0;
    double delta_leo = 0;
    double c1_effective = 0;
    double gamma = 0;
};

// c1 K^-beta + c2 (K/N)^alpha + c3 sqrt(delta_init)
double reduced_error(double n, double k, const ErrorModelParams& p);
double continuous_kstar(double n, const ErrorModelParams& p);
double min_error(double n, const ErrorModelParams& p);

// (alpha, gamma) for a d-dimensional state space with beta = 1.
std::pair<double, double> dimension_exponents(int d);

double kstar_heterogeneity_adjusted(double n, double h_infinity, double c1_bar, const ErrorModelParams& p);
double kstar_unbalanced(double n, double lambda_min, const ErrorModelParams& p);
double leo_delta(double delta_phi, double horizon_t, double delta_tau, double c_leo);

GranularityResult select_type_count(int n, const std::vector<double>& proportions, const ErrorModelParams& p,
                                    const LeoSelection& leo = {});

int exhaustive_kstar(double n, int k_lo, int k_hi, const ErrorModelParams& p);

struct SlopeFit {
    double slope = 0, intercept = 0, stderr_slope = 0;
};

// Ordinary least squares on (ln x, ln y).
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

}  // namespace hmfg
