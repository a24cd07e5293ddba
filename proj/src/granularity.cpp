#include "hmfg/granularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hmfg/errors.hpp"

namespace hmfg {

void validate(const ErrorModelParams& p) {
    if (!(p.c1 > 0 && p.c2 > 0 && p.c3 >= 0 && p.alpha > 0 && p.alpha <= 1 && p.beta_exp > 0 && p.delta_init >= 0))
        throw ConfigError("error model: need c1, c2 > 0, alpha in (0,1], beta > 0, c3 and delta_init >= 0");
}

double reduced_error(double n, double k, const ErrorModelParams& p) {
    if (!(k > 0)) throw DomainError("reduced_error: k must be positive");
    if (!(n >= 1)) throw DomainError("reduced_error: n must be at least 1");
    return p.c1 * std::pow(k, -p.beta_exp) + p.c2 * std::pow(k / n, p.alpha) + p.c3 * std::sqrt(p.delta_init);
}

double continuous_kstar(double n, const ErrorModelParams& p) {
    if (!(n >= 1)) throw DomainError("continuous_kstar: n must be at least 1");
    const double s = p.alpha + p.beta_exp;
    return std::pow(p.beta_exp * p.c1 / (p.alpha * p.c2), 1.0 / s) * std::pow(n, p.alpha / s);
}

double min_error(double n, const ErrorModelParams& p) { return reduced_error(n, continuous_kstar(n, p), p); }

std::pair<double, double> dimension_exponents(int d) {
    if (d < 1) throw DomainError("dimension_exponents: d must be at least 1");
    double alpha = d == 1 ? 0.5 : 1.0 / (d + 2);
    return {alpha, alpha / (alpha + 1.0)};
}

double kstar_heterogeneity_adjusted(double n, double h_infinity, double c1_bar, const ErrorModelParams& p) {
    if (h_infinity < 0) throw DomainError("kstar_heterogeneity_adjusted: h_infinity must be nonnegative");
    if (h_infinity == 0 || c1_bar == 0) return 0.0;
    ErrorModelParams q = p;
    q.c1 = c1_bar * h_infinity;
    return continuous_kstar(n, q);
}

double kstar_unbalanced(double n, double lambda_min, const ErrorModelParams& p) {
    if (!(lambda_min > 0 && lambda_min <= 1)) throw DomainError("kstar_unbalanced: lambda_min must lie in (0,1]");
    return continuous_kstar(lambda_min * n, p);
}

double leo_delta(double delta_phi, double horizon_t, double delta_tau, double c_leo) {
    if (!(delta_tau > 0)) throw DomainError("leo_delta: delta_tau must be positive");
    return c_leo * delta_phi * std::sqrt(horizon_t / delta_tau);
}

GranularityResult select_type_count(int n, const std::vector<double>& proportions, const ErrorModelParams& p,
                                    const LeoSelection& leo) {
    if (proportions.empty()) throw ConfigError("select_type_count: proportions are empty");
    if (n < 1) throw DomainError("select_type_count: n must be at least 1");
    double sum = 0.0;
    for (double l : proportions) {
        if (!(l > 0)) throw ConfigError("select_type_count: proportions must be positive");
        sum += l;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("select_type_count: proportions must sum to 1");

    const double K = static_cast<double>(proportions.size());
    const double lambda_min = *std::min_element(proportions.begin(), proportions.end());
    GranularityResult r;
    r.n_effective = lambda_min < 1.0 / K ? lambda_min * n : static_cast<double>(n);
    r.delta_leo = leo_delta(leo.delta_phi, leo.horizon_t, leo.delta_tau, leo.c_leo);
    r.c1_effective = p.c1 + r.delta_leo;
    r.gamma = p.alpha / (p.alpha + p.beta_exp);
    ErrorModelParams q = p;
    q.c1 = r.c1_effective;
    r.k_continuous = continuous_kstar(std::max(1.0, r.n_effective), q);
    int k = static_cast<int>(std::floor(r.k_continuous + 0.5));
    k = std::max(k, 2);
    int cap = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
    r.k_star = cap >= 2 ? std::min(k, cap) : std::max(1, cap);
    return r;
}

int exhaustive_kstar(double n, int k_lo, int k_hi, const ErrorModelParams& p) {
    if (k_lo < 1 || k_hi < k_lo) throw DomainError("exhaustive_kstar: empty or invalid range");
    int best = k_lo;
    double best_e = std::numeric_limits<double>::infinity();
    for (int k = k_lo; k <= k_hi; ++k) {
        double e = reduced_error(n, k, p);
        if (e < best_e) {
            best_e = e;
            best = k;
        }
    }
    return best;
}

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw DomainError("fit_loglog_slope: need at least 3 points");
    const double n = static_cast<double>(points.size());
    double sx = 0, sy = 0;
    for (auto [x, y] : points) {
        if (!(x > 0 && y > 0)) throw DomainError("fit_loglog_slope: values must be positive");
        sx += std::log(x);
        sy += std::log(y);
    }
    double mx = sx / n, my = sy / n, sxx = 0, sxy = 0;
    for (auto [x, y] : points) {
        double dx = std::log(x) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y) - my);
    }
    if (!(sxx > 0)) throw DomainError("fit_loglog_slope: x values must not all be equal");
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0;
    for (auto [x, y] : points) {
        double e = std::log(y) - (f.intercept + f.slope * std::log(x));
        sse += e * e;
    }
    f.stderr_slope = std::sqrt(sse / (n - 2) / sxx);
    return f;
}

}  // namespace hmfg
