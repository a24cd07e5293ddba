#include "hmfg/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hmfg/errors.hpp"

namespace hmfg {

std::vector<double> cdf_nodes(GridSlice s) {
    const auto& f = s.values;
    if (f.size() < 2) throw PreconditionError("cdf: slice needs at least two nodes");
    std::vector<double> F(f.size());
    F[0] = 0.0;
    for (std::size_t i = 1; i < f.size(); ++i) {
        if (f[i] < 0.0 || !std::isfinite(f[i])) throw PreconditionError("cdf: density must be finite and nonnegative");
        F[i] = F[i - 1] + 0.5 * (f[i - 1] + f[i]) * s.dq;
    }
    double mass = F.back();
    if (std::abs(mass - 1.0) > 1e-6) throw PreconditionError("cdf: slice is not normalised");
    for (double& v : F) v /= mass;
    F.back() = 1.0;
    return F;
}

std::vector<double> cdf_from_density(const Density& d, int time_index) {
    if (time_index < 0 || time_index > d.grid.n_t) throw PreconditionError("cdf: time index out of range");
    return cdf_nodes({d.slice(time_index), d.grid.dq});
}

double inverse_cdf(std::span<const double> cdf, double dq, double u) {
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.begin()) return 0.0;
    if (it == cdf.end()) return (cdf.size() - 1) * dq;
    auto i = static_cast<std::size_t>(it - cdf.begin());
    if (*it == u) return i * dq;
    double lo = cdf[i - 1], hi = cdf[i];
    return (i - 1) * dq + (u - lo) / (hi - lo) * dq;
}

QuantileTable quantile_table(GridSlice s, int n_mesh) {
    auto F = cdf_nodes(s);
    QuantileTable t;
    t.probabilities.resize(n_mesh);
    t.values.resize(n_mesh);
    for (int m = 0; m < n_mesh; ++m) {
        double u = (m + 0.5) / n_mesh;
        t.probabilities[m] = u;
        t.values[m] = inverse_cdf(F, s.dq, u);
    }
    return t;
}

namespace {

// Quantile function as linear pieces Q(u) = a + b (u - u0) on [u0, u1].
struct Piece {
    double u0, u1, a, b;
};

std::vector<Piece> pieces_of(const Discrete& d) {
    if (d.points.empty()) throw PreconditionError("wasserstein: empty sample");
    if (!d.weights.empty() && d.weights.size() != d.points.size())
        throw PreconditionError("wasserstein: weights and points differ in length");
    std::vector<std::size_t> idx(d.points.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return d.points[x] < d.points[y]; });
    double total = d.weights.empty() ? static_cast<double>(d.points.size())
                                     : std::accumulate(d.weights.begin(), d.weights.end(), 0.0);
    if (!(total > 0.0)) throw PreconditionError("wasserstein: weights must have positive sum");
    std::vector<Piece> out;
    double acc = 0.0;
    for (std::size_t r = 0; r < idx.size(); ++r) {
        double w = d.weights.empty() ? 1.0 : d.weights[idx[r]];
        if (w < 0.0) throw PreconditionError("wasserstein: negative weight");
        double u0 = acc / total;
        acc += w;
        double u1 = r + 1 == idx.size() ? 1.0 : acc / total;
        if (u1 > u0) out.push_back({u0, u1, d.points[idx[r]], 0.0});
    }
    return out;
}

std::vector<Piece> pieces_of(const GridSlice& s) {
    auto F = cdf_nodes(s);
    std::vector<Piece> out;
    for (std::size_t i = 1; i < F.size(); ++i) {
        double du = F[i] - F[i - 1];
        if (du > 0.0) out.push_back({F[i - 1], F[i], (i - 1) * s.dq, s.dq / du});
    }
    if (!out.empty()) out.back().u1 = 1.0;
    return out;
}

std::vector<Piece> pieces_of(const Distribution& d) {
    return std::visit([](const auto& x) { return pieces_of(x); }, d);
}

// Integral over [0,1] of |Qa - Qb|^p for p in {1, 2}, exact on merged pieces.
double exact_power_integral(const std::vector<Piece>& A, const std::vector<Piece>& B, int p) {
    double total = 0.0;
    std::size_t i = 0, j = 0;
    double u = 0.0;
    while (i < A.size() && j < B.size()) {
        double hi = std::min(A[i].u1, B[j].u1);
        if (hi > u) {
            // d(u) = c0 + c1 (u - lo) on [lo, hi]
            double lo = u, len = hi - lo;
            double c0 = (A[i].a + A[i].b * (lo - A[i].u0)) - (B[j].a + B[j].b * (lo - B[j].u0));
            double c1 = A[i].b - B[j].b;
            if (p == 2) {
                total += len * (c0 * c0 + c0 * c1 * len + c1 * c1 * len * len / 3.0);
            } else {
                double c_end = c0 + c1 * len;
                if (c0 * c_end >= 0.0) {
                    total += 0.5 * len * std::abs(c0 + c_end);
                } else {
                    double root = -c0 / c1;
                    total += 0.5 * root * std::abs(c0) + 0.5 * (len - root) * std::abs(c_end);
                }
            }
            u = hi;
        }
        if (A[i].u1 <= hi) ++i;
        if (j < B.size() && B[j].u1 <= hi) ++j;
    }
    return total;
}

bool both_grid(const Distribution& a, const Distribution& b) {
    return std::holds_alternative<GridSlice>(a) && std::holds_alternative<GridSlice>(b);
}

double mesh_power_mean(const GridSlice& a, const GridSlice& b, int p) {
    if (a.values.size() != b.values.size()) throw PreconditionError("wasserstein: grid slices differ in length");
    const int n = static_cast<int>(a.values.size());
    auto Fa = cdf_nodes(a);
    auto Fb = cdf_nodes(b);
    double s = 0.0;
    for (int m = 0; m < n; ++m) {
        double u = (m + 0.5) / n;
        double d = inverse_cdf(Fa, a.dq, u) - inverse_cdf(Fb, b.dq, u);
        s += p == 2 ? d * d : std::abs(d);
    }
    return s / n;
}

}  // namespace

double w2_1d(const Distribution& a, const Distribution& b) {
    if (both_grid(a, b)) return std::sqrt(mesh_power_mean(std::get<GridSlice>(a), std::get<GridSlice>(b), 2));
    return std::sqrt(std::max(0.0, exact_power_integral(pieces_of(a), pieces_of(b), 2)));
}

double w1_1d(const Distribution& a, const Distribution& b) {
    if (both_grid(a, b)) return mesh_power_mean(std::get<GridSlice>(a), std::get<GridSlice>(b), 1);
    return exact_power_integral(pieces_of(a), pieces_of(b), 1);
}

double heterogeneity_measure(const std::vector<Distribution>& dists) {
    const std::size_t K = dists.size();
    if (K == 0) throw PreconditionError("heterogeneity: no distributions");
    if (K == 1) return 0.0;
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = k + 1; l < K; ++l) s += w2_1d(dists[k], dists[l]);
    return 2.0 * s / (static_cast<double>(K) * (K - 1));
}

double heterogeneity_measure(const std::vector<Density>& densities, int time_index) {
    if (densities.empty()) throw PreconditionError("heterogeneity: no densities");
    std::vector<Distribution> d;
    for (const auto& r : densities) {
        if (!(r.grid == densities.front().grid)) throw PreconditionError("heterogeneity: mismatched grids");
        d.emplace_back(GridSlice{r.slice(time_index), r.grid.dq});
    }
    return heterogeneity_measure(d);
}

double heterogeneity_measure_time_avg(const std::vector<const Density*>& densities) {
    if (densities.empty()) throw PreconditionError("heterogeneity: no densities");
    const std::size_t K = densities.size();
    if (K == 1) return 0.0;
    const Grid& g = densities.front()->grid;
    for (const auto* r : densities)
        if (!(r->grid == g)) throw PreconditionError("heterogeneity: mismatched grids");
    double total = 0.0;
    for (int j = 0; j < g.slices(); ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t l = k + 1; l < K; ++l)
                s += w2_1d(GridSlice{densities[k]->slice(j), g.dq}, GridSlice{densities[l]->slice(j), g.dq});
        total += 2.0 * s / (static_cast<double>(K) * (K - 1));
    }
    return total / g.slices();
}

std::vector<RateRow> empirical_rate_experiment(const Distribution& base, const std::vector<int>& sample_sizes,
                                               int trials, std::uint64_t rng_seed) {
    if (trials < 1) throw PreconditionError("rate experiment: trials must be positive");
    for (int n : sample_sizes)
        if (n < 1) throw PreconditionError("rate experiment: sample sizes must be positive");
    auto base_pieces = pieces_of(base);
    auto draw = [&](double u) {
        auto it = std::lower_bound(base_pieces.begin(), base_pieces.end(), u,
                                   [](const Piece& p, double v) { return p.u1 < v; });
        if (it == base_pieces.end()) --it;
        return it->a + it->b * (u - it->u0);
    };
    std::vector<RateRow> rows;
    for (int n : sample_sizes) {
        std::vector<double> w1(trials), w2(trials);
        for (int tr = 0; tr < trials; ++tr) {
            std::seed_seq seq{rng_seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(tr)};
            std::mt19937_64 rng(seq);
            std::uniform_real_distribution<double> U(0.0, 1.0);
            Discrete sample;
            sample.points.resize(n);
            for (double& x : sample.points) x = draw(U(rng));
            auto sp = pieces_of(sample);
            w1[tr] = exact_power_integral(sp, base_pieces, 1);
            w2[tr] = std::sqrt(std::max(0.0, exact_power_integral(sp, base_pieces, 2)));
        }
        auto stats = [&](const std::vector<double>& v, double& mean, double& sd) {
            mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            sd = v.size() > 1 ? std::sqrt(ss / (v.size() - 1)) : 0.0;
        };
        RateRow r;
        r.n = n;
        r.trials = trials;
        r.seed = rng_seed;
        stats(w1, r.mean_w1, r.std_w1);
        stats(w2, r.mean_w2, r.std_w2);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace hmfg
