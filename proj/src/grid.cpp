#include "hmfg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hmfg/errors.hpp"

namespace hmfg {

Grid make_grid(int n_q, int n_t, double q_max, double horizon_t) {
    if (n_q < 3) throw ConfigError("grid: n_q must be at least 3, got " + std::to_string(n_q));
    if (n_t < 1) throw ConfigError("grid: n_t must be positive, got " + std::to_string(n_t));
    if (!(q_max > 0.0) || !std::isfinite(q_max)) throw ConfigError("grid: q_max must be positive");
    if (!(horizon_t > 0.0) || !std::isfinite(horizon_t)) throw ConfigError("grid: horizon_t must be positive");
    Grid g;
    g.n_q = n_q;
    g.n_t = n_t;
    g.q_max = q_max;
    g.horizon_t = horizon_t;
    g.dq = q_max / (n_q - 1);
    g.dt = horizon_t / n_t;
    return g;
}

int Grid::nearest_index(double q) const {
    long i = std::lround(q / dq);
    return static_cast<int>(std::clamp<long>(i, 0, n_q - 1));
}

double trapezoid(std::span<const double> f, double dq) {
    if (f.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i];
    s -= 0.5 * (f.front() + f.back());
    return s * dq;
}

void normalize_slice(std::span<double> s, double dq) {
    for (double& v : s) v = std::max(v, 0.0);
    double mass = trapezoid(s, dq);
    if (!(mass > 0.0) || !std::isfinite(mass)) throw DegenerateDensityError("density slice has no positive mass");
    for (double& v : s) v /= mass;
}

double project_to_simplex(std::span<double> s, double dq) {
    const std::size_t n = s.size();
    if (n < 2) throw PreconditionError("project_to_simplex: need at least two nodes");
    auto w = [n](std::size_t i) { return (i == 0 || i + 1 == n) ? 0.5 : 1.0; };
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    double sw = 0.0, swy = 0.0, shift = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sw += w(order[k]);
        swy += w(order[k]) * s[order[k]];
        shift = (dq * swy - 1.0) / (dq * sw);
        if (k + 1 == n || shift >= s[order[k + 1]]) break;
    }
    for (double& v : s) v = std::max(v - shift, 0.0);
    return shift;
}

Density normalize_density(const Density& d) {
    Density out = d;
    for (int j = 0; j < d.grid.slices(); ++j) normalize_slice(out.slice(j), d.grid.dq);
    return out;
}

double max_mass_error(const Density& d) {
    double err = 0.0;
    for (int j = 0; j < d.grid.slices(); ++j) err = std::max(err, std::abs(trapezoid(d.slice(j), d.grid.dq) - 1.0));
    return err;
}

std::vector<double> truncated_gaussian(const Grid& g, double mean, double stddev) {
    std::vector<double> v(g.n_q);
    for (int i = 0; i < g.n_q; ++i) {
        double z = (g.q(i) - mean) / stddev;
        v[i] = std::exp(-0.5 * z * z);
    }
    normalize_slice(v, g.dq);
    return v;
}

Density constant_in_time(const Grid& g, std::span<const double> slice0) {
    Density d(g);
    for (int j = 0; j < g.slices(); ++j) std::copy(slice0.begin(), slice0.end(), d.slice(j).begin());
    return d;
}

}  // namespace hmfg
