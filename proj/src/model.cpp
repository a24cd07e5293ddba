#include "hmfg/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hmfg/errors.hpp"

namespace hmfg {

double sinr_rate(double p, double gain, double noise, double interference, double bandwidth) {
    return bandwidth * std::log2(1.0 + p * gain / (noise + interference));
}

double mean_field_interference(const std::vector<const Density*>& densities,
                               const std::vector<const PowerField*>& policies, const std::vector<int>& class_counts,
                               const std::vector<double>& cross_gains, int time_index, double i_sat) {
    const std::size_t K = densities.size();
    if (policies.size() != K || class_counts.size() != K || cross_gains.size() != K)
        throw PreconditionError("interference: inconsistent number of types");
    double total = i_sat;
    for (std::size_t k = 0; k < K; ++k) {
        const Grid& g = densities[k]->grid;
        auto r = densities[k]->slice(time_index);
        auto p = policies[k]->slice(time_index);
        double s = 0.0;
        for (int i = 0; i < g.n_q; ++i) s += g.weight(i) * p[i] * r[i];
        total += class_counts[k] * cross_gains[k] * s * g.dq;
    }
    return total;
}

double computational_price(const std::vector<const Density*>& densities, const std::vector<const Field*>& rates,
                           const std::vector<double>& proportions, int time_index, const Snapshot& snapshot,
                           double kappa, double varrho, double mu) {
    const std::size_t K = densities.size();
    if (rates.size() != K || proportions.size() != K) throw PreconditionError("price: inconsistent number of types");
    double congestion = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const Grid& g = densities[k]->grid;
        auto r = densities[k]->slice(time_index);
        auto R = rates[k]->slice(time_index);
        double s = 0.0;
        for (int i = 0; i < g.n_q; ++i) s += g.weight(i) * R[i] * r[i];
        congestion += proportions[k] * s * g.dq;
    }
    return kappa + varrho * congestion + phi_sat(snapshot, mu);
}

double LinkModel::rate(double p) const { return c0 * std::log1p(p * gain / noise_eff); }

double LinkModel::rate_derivative(double p) const { return c0 * gain / (noise_eff + p * gain); }

double LinkModel::power_for_rate(double r) const { return std::expm1(r / c0) * noise_eff / gain; }

LinkModel make_link(const ChannelParams& ch, const TypeParams& tp, double price, double interference) {
    LinkModel l;
    l.c0 = ch.bandwidth_b / (ch.bits_per_unit * std::numbers::ln2);
    l.gain = ch.representative_gain();
    l.noise_eff = ch.noise + interference;
    l.p_max = ch.p_max;
    l.energy = ch.energy_scale * tp.beta1;
    l.price_w = tp.beta2 * price;
    return l;
}

namespace {

// Unclamped stationary point of energy p^2 + (price_w - g) R(p) for g > price_w.
double stationary_power(const LinkModel& l, double a) {
    if (!(l.energy > 0)) return l.p_max;
    // 2 e g p^2 + 2 e N p - a c0 g = 0, positive root in cancellation-free form.
    const double A = 2.0 * l.energy * l.gain;
    const double B = 2.0 * l.energy * l.noise_eff;
    const double C = a * l.c0 * l.gain;
    return 2.0 * C / (B + std::sqrt(B * B + 4.0 * A * C));
}

}  // namespace

double optimal_power(const LinkModel& link, double dV_dq) {
    const double a = dV_dq - link.price_w;
    if (!(a > 0) || !(link.p_max > 0)) return 0.0;
    return std::clamp(stationary_power(link, a), 0.0, link.p_max);
}

double optimal_power(double dV_dq, double price, const TypeParams& tp, const ChannelParams& ch, double interference) {
    return optimal_power(make_link(ch, tp, price, interference), dV_dq);
}

HamiltonianPoint upwind_hamiltonian(const LinkModel& link, double data_rate, double grad_plus, double grad_minus,
                                    bool has_plus, bool has_minus) {
    const double gA = has_plus ? grad_plus : 0.0;
    const double gB = has_minus ? grad_minus : 0.0;
    const double P = link.p_max;
    const double pD = data_rate > 0 ? link.power_for_rate(data_rate) : 0.0;

    auto eval = [&](double p) {
        double R = link.rate(p);
        double drift = data_rate - R;
        double v = link.energy * p * p + link.price_w * R + (drift >= 0 ? drift * gA : drift * gB);
        return HamiltonianPoint{v, p, drift};
    };

    // Upward-drift region p <= min(pD, P): objective convex or increasing.
    double hiA = std::min(pD, P);
    double pA = 0.0;
    if (gA - link.price_w > 0) pA = std::min(stationary_power(link, gA - link.price_w), hiA);
    HamiltonianPoint best = eval(pA);
    if (pD < P) {
        double pB = pD;
        if (gB - link.price_w > 0) pB = std::clamp(stationary_power(link, gB - link.price_w), pD, P);
        HamiltonianPoint b = eval(pB);
        if (b.value < best.value) best = b;
    }
    return best;
}

double control_cost(const LinkModel& link, double data_rate, double drift, double grad_plus, double grad_minus,
                    bool has_plus, bool has_minus) {
    const double R = data_rate - drift;
    const double p = R > 0 ? link.power_for_rate(R) : 0.0;
    const double g = drift >= 0 ? (has_plus ? grad_plus : 0.0) : (has_minus ? grad_minus : 0.0);
    return link.energy * p * p + link.price_w * R + drift * g;
}

HamiltonianPoint proximal_control(const LinkModel& link, double data_rate, double grad_plus, double grad_minus,
                                  bool has_plus, bool has_minus, double lambda, double drift_ref) {
    if (!(lambda > 0)) return upwind_hamiltonian(link, data_rate, grad_plus, grad_minus, has_plus, has_minus);
    const double gA = has_plus ? grad_plus : 0.0;
    const double gB = has_minus ? grad_minus : 0.0;
    const double r_max = link.rate(link.p_max);
    const double D = data_rate;
    const double N = link.noise_eff, G = link.gain, c0 = link.c0, e = link.energy, w = link.price_w;

    // Objective in the rate variable R; convex on each side of R = D.
    auto f = [&](double R, double g) {
        double p = std::expm1(R / c0) * N / G;
        double d = D - R - drift_ref;
        return e * p * p + w * R + (D - R) * g + 0.5 * lambda * d * d;
    };
    auto df = [&](double R, double g, double* d2) {
        double ex = std::exp(R / c0);
        double p = (ex - 1.0) * N / G, dp = ex * N / (c0 * G);
        if (d2) *d2 = 2.0 * e * (dp * dp + p * dp / c0) + lambda;
        return 2.0 * e * p * dp + w - g - lambda * (D - R - drift_ref);
    };
    // Newton from the reference rate, kept inside a shrinking bracket.
    const double r_ref = D - drift_ref;
    auto solve = [&](double lo, double hi, double g) {
        if (df(lo, g, nullptr) >= 0) return lo;
        if (df(hi, g, nullptr) <= 0) return hi;
        double x = (r_ref > lo && r_ref < hi) ? r_ref : 0.5 * (lo + hi);
        const double tol = 1e-12 * std::max(r_max, 1.0);
        for (int it = 0; it < 100 && hi - lo > tol; ++it) {
            double d2;
            double d1 = df(x, g, &d2);
            if (d1 > 0) hi = x;
            else lo = x;
            double nx = x - d1 / d2;
            if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
            if (std::abs(nx - x) <= tol) {
                x = nx;
                break;
            }
            x = nx;
        }
        return x;
    };

    const double hiA = std::clamp(D, 0.0, r_max);
    double best_r;
    if (gA >= gB && D > 0 && D < r_max) {
        // The slope jumps up by gA - gB at R = D, so the objective is convex on [0, r_max].
        const double dA = df(D, gA, nullptr);
        if (dA > 0) best_r = solve(0.0, D, gA);
        else if (dA + gA - gB < 0) best_r = solve(D, r_max, gB);
        else best_r = D;
    } else {
        double rA = solve(0.0, hiA, gA);
        double best_f = f(rA, gA);
        best_r = rA;
        if (D < r_max) {
            double rB = solve(std::max(D, 0.0), r_max, gB);
            if (f(rB, gB) < best_f) best_r = rB;
        }
    }
    HamiltonianPoint out;
    out.power = std::clamp(std::expm1(best_r / c0) * N / G, 0.0, link.p_max);
    out.drift = D - best_r;
    out.value = control_cost(link, D, out.drift, grad_plus, grad_minus, has_plus, has_minus);
    return out;
}

}  // namespace hmfg
