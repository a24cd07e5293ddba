#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hmfg {

// Boundary handling of the time axis of the space-time Poisson operator.
enum class TimeBoundary {
    Neumann,          // reflecting at both ends; mean of the solution fixed to 0
    NeumannDirichlet  // reflecting at the first slice, zero beyond the last slice
};

// Direct solver for (-d_ss - d_xx) u = f on an n_s x n_x tensor grid with
// reflecting state boundaries. The state axis is node-centred (ghost-point
// Neumann, half-weight endpoints) and diagonalised once; each state mode is
// then a tridiagonal system in time. Storage is time-major.
class SpaceTimePoisson {
public:
    SpaceTimePoisson(int n_x, double dx, int n_s, double ds, TimeBoundary bc);

    void solve(std::span<const double> rhs, std::span<double> out) const;
    std::vector<double> solve(std::span<const double> rhs) const;

    // Applies the discrete operator, for testing.
    std::vector<double> apply(std::span<const double> u) const;

    int n_x() const { return n_x_; }
    int n_s() const { return n_s_; }

private:
    int n_x_, n_s_;
    double dx_, ds_;
    TimeBoundary bc_;
    Eigen::MatrixXd to_modes_;    // U^T W^{1/2}
    Eigen::MatrixXd from_modes_;  // W^{-1/2} U
    Eigen::VectorXd eig_;
    std::vector<double> t_diag_, t_off_;
};

}  // namespace hmfg
