#pragma once

// Brute-force optimal transport between two finite distributions, solved as
// a linear program with a dense two-phase simplex (Bland's rule). Used only
// as a test oracle for the quantile-based distances.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oracle {

// min c.x subject to A x = b, x >= 0, with b >= 0. Returns the optimal value.
inline double simplex_min(std::vector<std::vector<double>> A, std::vector<double> b, const std::vector<double>& c) {
    const int m = static_cast<int>(A.size());
    const int n = static_cast<int>(c.size());
    const double eps = 1e-12;
    // Tableau columns: n originals, m artificials, rhs.
    std::vector<std::vector<double>> T(m + 1, std::vector<double>(n + m + 1, 0.0));
    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) T[i][j] = A[i][j];
        T[i][n + i] = 1.0;
        T[i][n + m] = b[i];
        basis[i] = n + i;
    }

    auto pivot = [&](int r, int col) {
        const double p = T[r][col];
        for (double& v : T[r]) v /= p;
        for (int i = 0; i <= m; ++i) {
            if (i == r || T[i][col] == 0.0) continue;
            const double f = T[i][col];
            for (int j = 0; j <= n + m; ++j) T[i][j] -= f * T[r][j];
        }
        basis[r] = col;
    };

    auto run = [&](int allowed_cols) {
        for (int guard = 0; guard < 100000; ++guard) {
            int enter = -1;
            for (int j = 0; j < allowed_cols; ++j)
                if (T[m][j] < -eps) {
                    enter = j;
                    break;
                }
            if (enter < 0) return;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i)
                if (T[i][enter] > eps) {
                    const double ratio = T[i][n + m] / T[i][enter];
                    if (ratio < best - eps || (std::abs(ratio - best) <= eps && basis[i] < basis[leave])) {
                        best = ratio;
                        leave = i;
                    }
                }
            if (leave < 0) throw std::runtime_error("simplex: unbounded");
            pivot(leave, enter);
        }
        throw std::runtime_error("simplex: iteration limit");
    };

    // Phase 1: minimise the sum of artificials.
    for (int j = 0; j <= n + m; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += T[i][j];
        T[m][j] = (j >= n && j < n + m) ? 0.0 : -s;
    }
    run(n + m);
    if (std::abs(T[m][n + m]) > 1e-9) throw std::runtime_error("simplex: infeasible");
    for (int i = 0; i < m; ++i)
        if (basis[i] >= n)
            for (int j = 0; j < n; ++j)
                if (std::abs(T[i][j]) > eps) {
                    pivot(i, j);
                    break;
                }

    // Phase 2 objective row in terms of the non-basic variables.
    for (int j = 0; j <= n + m; ++j) T[m][j] = j < n ? c[j] : 0.0;
    for (int i = 0; i < m; ++i) {
        const int bj = basis[i];
        if (bj < n && T[m][bj] != 0.0) {
            const double f = T[m][bj];
            for (int j = 0; j <= n + m; ++j) T[m][j] -= f * T[i][j];
        }
    }
    run(n);
    return -T[m][n + m];
}

// Optimal transport cost sum pi_ij |x_i - y_j|^p between normalised weights.
inline double transport_cost(const std::vector<double>& x, std::vector<double> wx, const std::vector<double>& y,
                             std::vector<double> wy, int p) {
    double sx = 0, sy = 0;
    for (double w : wx) sx += w;
    for (double w : wy) sy += w;
    for (double& w : wx) w /= sx;
    for (double& w : wy) w /= sy;
    const int a = static_cast<int>(x.size()), b = static_cast<int>(y.size());
    std::vector<double> cost(a * b);
    for (int i = 0; i < a; ++i)
        for (int j = 0; j < b; ++j) cost[i * b + j] = std::pow(std::abs(x[i] - y[j]), p);
    // Row sums for every source, column sums for all targets but the last (redundant).
    std::vector<std::vector<double>> A;
    std::vector<double> rhs;
    for (int i = 0; i < a; ++i) {
        std::vector<double> row(a * b, 0.0);
        for (int j = 0; j < b; ++j) row[i * b + j] = 1.0;
        A.push_back(row);
        rhs.push_back(wx[i]);
    }
    for (int j = 0; j + 1 < b; ++j) {
        std::vector<double> row(a * b, 0.0);
        for (int i = 0; i < a; ++i) row[i * b + j] = 1.0;
        A.push_back(row);
        rhs.push_back(wy[j]);
    }
    return simplex_min(A, rhs, cost);
}

}  // namespace oracle
