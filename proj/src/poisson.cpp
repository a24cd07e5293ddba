#include "hmfg/poisson.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "hmfg/errors.hpp"

namespace hmfg {

SpaceTimePoisson::SpaceTimePoisson(int n_x, double dx, int n_s, double ds, TimeBoundary bc)
    : n_x_(n_x), n_s_(n_s), dx_(dx), ds_(ds), bc_(bc) {
    if (n_x < 2 || n_s < 1 || !(dx > 0) || !(ds > 0)) throw PreconditionError("poisson: bad grid");

    // Stiffness S and weights W give -d_xx = W^{-1} S; A = W^{-1/2} S W^{-1/2} is symmetric.
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n_x, n_x);
    for (int i = 0; i + 1 < n_x; ++i) {
        S(i, i) += 1.0;
        S(i + 1, i + 1) += 1.0;
        S(i, i + 1) -= 1.0;
        S(i + 1, i) -= 1.0;
    }
    S /= dx * dx;
    Eigen::VectorXd w = Eigen::VectorXd::Ones(n_x);
    w(0) = w(n_x - 1) = 0.5;
    Eigen::VectorXd ws = w.cwiseSqrt();
    Eigen::VectorXd wis = ws.cwiseInverse();
    Eigen::MatrixXd A = wis.asDiagonal() * S * wis.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    eig_ = es.eigenvalues();
    eig_(0) = 0.0;  // the constant mode, exactly
    to_modes_ = es.eigenvectors().transpose() * ws.asDiagonal();
    from_modes_ = wis.asDiagonal() * es.eigenvectors();

    t_diag_.assign(n_s, 2.0 / (ds * ds));
    t_off_.assign(n_s > 1 ? n_s - 1 : 0, -1.0 / (ds * ds));
    t_diag_[0] = 1.0 / (ds * ds);
    if (bc == TimeBoundary::Neumann) t_diag_[n_s - 1] = (n_s == 1 ? 0.0 : 1.0 / (ds * ds));
}

void SpaceTimePoisson::solve(std::span<const double> rhs, std::span<double> out) const {
    const std::size_t total = static_cast<std::size_t>(n_x_) * n_s_;
    if (rhs.size() != total || out.size() != total) throw PreconditionError("poisson: size mismatch");

    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> F(rhs.data(), n_s_, n_x_);
    // Rows are time slices; modal coefficients per slice.
    Eigen::MatrixXd G = F * to_modes_.transpose();

    std::vector<double> c(n_s_), d(n_s_);
    for (int l = 0; l < n_x_; ++l) {
        const bool singular = bc_ == TimeBoundary::Neumann && l == 0;
        if (singular) {
            // Constant-in-space mode of a pure Neumann problem: fix y_0 = 0, solve the rest, remove the mean.
            if (n_s_ == 1) {
                G(0, 0) = 0.0;
                continue;
            }
            std::vector<double> y(n_s_, 0.0);
            // Rows 1..n_s-1 of the time operator with y_0 = 0 eliminated.
            const int m = n_s_ - 1;
            std::vector<double> a(m), b(m), r(m);
            for (int s = 0; s < m; ++s) {
                b[s] = t_diag_[s + 1];
                r[s] = G(s + 1, 0);
            }
            // Thomas on rows 1..n_s-1.
            double off = t_off_[0];
            std::vector<double> cp(m), dp(m);
            cp[0] = off / b[0];
            dp[0] = r[0] / b[0];
            for (int s = 1; s < m; ++s) {
                double den = b[s] - off * cp[s - 1];
                cp[s] = off / den;
                dp[s] = (r[s] - off * dp[s - 1]) / den;
            }
            y[m] = dp[m - 1];
            for (int s = m - 2; s >= 0; --s) y[s + 1] = dp[s] - cp[s] * y[s + 2];
            double mean = 0.0;
            for (double v : y) mean += v;
            mean /= n_s_;
            for (int s = 0; s < n_s_; ++s) G(s, 0) = y[s] - mean;
            continue;
        }
        const double lam = eig_(l);
        // Thomas algorithm for (T/ds^2 + lam) y = g.
        double b0 = t_diag_[0] + lam;
        if (n_s_ == 1) {
            G(0, l) /= b0;
            continue;
        }
        c[0] = t_off_[0] / b0;
        d[0] = G(0, l) / b0;
        for (int s = 1; s < n_s_; ++s) {
            double den = t_diag_[s] + lam - t_off_[s - 1] * c[s - 1];
            c[s] = s + 1 < n_s_ ? t_off_[s] / den : 0.0;
            d[s] = (G(s, l) - t_off_[s - 1] * d[s - 1]) / den;
        }
        G(n_s_ - 1, l) = d[n_s_ - 1];
        for (int s = n_s_ - 2; s >= 0; --s) G(s, l) = d[s] - c[s] * G(s + 1, l);
    }

    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(out.data(), n_s_, n_x_);
    X = G * from_modes_.transpose();
    if (bc_ == TimeBoundary::Neumann) {
        // The gauge above fixes the unweighted mean of the constant mode; restate it on the trapezoid mean.
        double num = 0.0, den = 0.0;
        for (int s = 0; s < n_s_; ++s)
            for (int i = 0; i < n_x_; ++i) {
                double wi = (i == 0 || i == n_x_ - 1) ? 0.5 : 1.0;
                num += wi * X(s, i);
                den += wi;
            }
        X.array() -= num / den;
    }
}

std::vector<double> SpaceTimePoisson::solve(std::span<const double> rhs) const {
    std::vector<double> out(rhs.size());
    solve(rhs, out);
    return out;
}

std::vector<double> SpaceTimePoisson::apply(std::span<const double> u) const {
    std::vector<double> out(u.size(), 0.0);
    auto at = [&](int s, int i) { return u[static_cast<std::size_t>(s) * n_x_ + i]; };
    for (int s = 0; s < n_s_; ++s) {
        for (int i = 0; i < n_x_; ++i) {
            double wi = (i == 0 || i == n_x_ - 1) ? 0.5 : 1.0;
            double lx = 0.0;
            if (i > 0) lx += at(s, i) - at(s, i - 1);
            if (i + 1 < n_x_) lx += at(s, i) - at(s, i + 1);
            lx /= wi * dx_ * dx_;
            double lt = t_diag_[s] * at(s, i);
            if (s > 0) lt += t_off_[s - 1] * at(s - 1, i);
            if (s + 1 < n_s_) lt += t_off_[s] * at(s + 1, i);
            out[static_cast<std::size_t>(s) * n_x_ + i] = lt + lx;
        }
    }
    return out;
}

}  // namespace hmfg
