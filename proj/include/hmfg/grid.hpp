#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hmfg {

// Node-centred state grid on [0, q_max] (both endpoints included) and
// n_t + 1 time slices on [0, horizon_t].
struct Grid {
    int n_q = 0;
    int n_t = 0;
    double q_max = 0.0;
    double horizon_t = 0.0;
    double dq = 0.0;
    double dt = 0.0;

    double q(int i) const { return i * dq; }
    double t(int j) const { return j * dt; }
    int nearest_index(double q) const;
    int slices() const { return n_t + 1; }
    std::size_t size() const { return static_cast<std::size_t>(n_q) * slices(); }

    // Trapezoid weight of node i (1/2 at the endpoints).
    double weight(int i) const { return (i == 0 || i == n_q - 1) ? 0.5 : 1.0; }

    bool operator==(const Grid&) const = default;
};

Grid make_grid(int n_q, int n_t, double q_max, double horizon_t);

// A scalar field over (state, time). Storage is time-major so a time slice
// is a contiguous run of n_q values.
struct Field {
    Grid grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

    double& operator()(int i, int j) { return values[static_cast<std::size_t>(j) * grid.n_q + i]; }
    double operator()(int i, int j) const { return values[static_cast<std::size_t>(j) * grid.n_q + i]; }

    std::span<double> slice(int j) {
        return {values.data() + static_cast<std::size_t>(j) * grid.n_q, static_cast<std::size_t>(grid.n_q)};
    }
    std::span<const double> slice(int j) const {
        return {values.data() + static_cast<std::size_t>(j) * grid.n_q, static_cast<std::size_t>(grid.n_q)};
    }
};

using Density = Field;
using DualPotential = Field;
using Momentum = Field;
using PowerField = Field;

double trapezoid(std::span<const double> f, double dq);

// Clips negatives and rescales every time slice to unit trapezoid mass.
Density normalize_density(const Density& d);
void normalize_slice(std::span<double> s, double dq);

// Euclidean projection onto {s >= 0, trapezoid mass 1}: s_i <- max(s_i - shift, 0).
// Returns the shift.
double project_to_simplex(std::span<double> s, double dq);

double max_mass_error(const Density& d);

// Truncated Gaussian on the state grid, unit mass.
std::vector<double> truncated_gaussian(const Grid& g, double mean, double stddev);

// Density with every time slice equal to `slice0`.
Density constant_in_time(const Grid& g, std::span<const double> slice0);

}  // namespace hmfg
