#include "hmfg/params.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "hmfg/errors.hpp"

namespace hmfg {

double DataRate::operator()(double t) const {
    if (amplitude == 0.0) return base;
    return base * (1.0 + amplitude * std::sin(2.0 * std::numbers::pi * t / period));
}

double winner_b1_path_loss_db(double d, double fc_hz) {
    return 22.7 * std::log10(d) + 41.0 + 20.0 * std::log10(fc_hz / 5e9);
}

double ChannelParams::representative_gain() const {
    return std::pow(10.0, -winner_b1_path_loss_db(reference_distance, carrier_hz) / 10.0);
}

double ChannelParams::peak_rate_units() const {
    return bandwidth_b * std::log2(1.0 + p_max * representative_gain() / noise) / bits_per_unit;
}

void validate(const ChannelParams& c) {
    if (!(c.bandwidth_b > 0 && c.noise > 0 && c.p_max >= 0 && c.carrier_hz > 0 && c.d0 > 0 &&
          c.d_max >= c.d0 && c.bits_per_unit > 0 && c.energy_scale > 0 && c.cross_gain >= 0 &&
          c.reference_distance > 0 && c.shadowing_db >= 0))
        throw ConfigError("channel: parameters must be positive (p_max, cross_gain, shadowing may be zero)");
}

std::vector<int> FleetConfig::class_counts() const { return largest_remainder_counts(proportions, n_vehicles); }

void validate(const FleetConfig& f) {
    if (f.n_vehicles < 1) throw ConfigError("fleet: n_vehicles must be positive");
    if (f.k_types < 1) throw ConfigError("fleet: k_types must be positive");
    if (static_cast<int>(f.proportions.size()) != f.k_types || static_cast<int>(f.types.size()) != f.k_types ||
        static_cast<int>(f.rho0.size()) != f.k_types)
        throw ConfigError("fleet: proportions, types and initial densities must each have k_types entries");
    double s = 0.0;
    for (double l : f.proportions) {
        if (!(l > 0.0)) throw ConfigError("fleet: every proportion must be positive");
        s += l;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ConfigError("fleet: proportions must sum to 1");
    for (int k = 0; k < f.k_types; ++k) {
        const auto& t = f.types[k];
        if (!(t.beta1 > 0 && t.beta2 > 0 && t.terminal_c >= 0 && t.sigma > 0 && t.data_rate.base >= 0))
            throw ConfigError("fleet: type " + std::to_string(k) + " has invalid parameters");
        if (t.data_rate.amplitude < 0 || t.data_rate.amplitude > 1 || !(t.data_rate.period > 0))
            throw ConfigError("fleet: data_rate amplitude must lie in [0,1] with positive period");
        if (t.theta < 0 || t.theta > 1) throw ConfigError("fleet: theta must lie in [0,1]");
        if (k > 0 && !(t.theta > f.types[k - 1].theta)) throw ConfigError("fleet: theta must be strictly increasing");
        if (static_cast<int>(f.rho0[k].size()) != f.grid.n_q) throw ConfigError("fleet: rho0 has wrong length");
    }
    if (f.k_types >= 2 && (f.types.front().theta != 0.0 || f.types.back().theta != 1.0))
        throw ConfigError("fleet: theta must run from 0 to 1");
}

std::vector<int> largest_remainder_counts(const std::vector<double>& proportions, int n) {
    const std::size_t k = proportions.size();
    std::vector<int> counts(k);
    std::vector<double> rem(k);
    int total = 0;
    for (std::size_t i = 0; i < k; ++i) {
        double exact = proportions[i] * n;
        counts[i] = static_cast<int>(std::floor(exact));
        rem[i] = exact - counts[i];
        total += counts[i];
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t r = 0; total < n; ++r, ++total) ++counts[order[r % k]];
    return counts;
}

namespace {

double anchor_interp(double theta, double a0, double a1, double a2) {
    if (theta <= 0.5) return a0 + (a1 - a0) * (theta / 0.5);
    return a1 + (a2 - a1) * ((theta - 0.5) / 0.5);
}

}  // namespace

TypeParams reference_type(double theta) {
    TypeParams t;
    t.theta = theta;
    t.beta1 = anchor_interp(theta, 0.5, 0.7, 1.0);
    t.beta2 = anchor_interp(theta, 1.0, 0.8, 0.6);
    t.terminal_c = 0.5;
    t.sigma = 2.0;
    t.data_rate.base = 30.0 + 40.0 * theta;
    return t;
}

FleetConfig make_reference_fleet(const Grid& g, int n_vehicles, int k_types, std::vector<double> proportions) {
    if (k_types < 1) throw ConfigError("fleet: k_types must be positive");
    if (proportions.empty()) proportions.assign(k_types, 1.0 / k_types);
    FleetConfig f;
    f.grid = g;
    f.n_vehicles = n_vehicles;
    f.k_types = k_types;
    f.proportions = std::move(proportions);
    for (int k = 0; k < k_types; ++k) {
        double theta = k_types == 1 ? 0.5 : static_cast<double>(k) / (k_types - 1);
        f.types.push_back(reference_type(theta));
        f.rho0.push_back(truncated_gaussian(g, g.q_max * (k + 1.0) / (k_types + 1.0), 0.1 * g.q_max));
    }
    validate(f);
    return f;
}

FleetConfig merge_types(const FleetConfig& f, int k_target, std::vector<int>* group_of) {
    if (k_target < 1 || k_target > f.k_types) throw ConfigError("merge: target type count out of range");
    std::vector<int> grp(f.k_types);
    for (int k = 0; k < f.k_types; ++k) grp[k] = static_cast<int>((static_cast<long>(k) * k_target) / f.k_types);
    if (group_of) *group_of = grp;

    FleetConfig m;
    m.grid = f.grid;
    m.n_vehicles = f.n_vehicles;
    m.k_types = k_target;
    m.proportions.assign(k_target, 0.0);
    m.types.assign(k_target, TypeParams{});
    m.rho0.assign(k_target, std::vector<double>(f.grid.n_q, 0.0));
    std::vector<double> theta(k_target, 0.0);
    for (int k = 0; k < f.k_types; ++k) m.proportions[grp[k]] += f.proportions[k];
    for (auto& t : m.types) {
        t.beta1 = t.beta2 = t.terminal_c = t.sigma = 0.0;
        t.data_rate = DataRate{0.0, 0.0, 0.0};
    }
    for (int k = 0; k < f.k_types; ++k) {
        int g = grp[k];
        double w = f.proportions[k] / m.proportions[g];
        const auto& s = f.types[k];
        auto& t = m.types[g];
        theta[g] += w * s.theta;
        t.beta1 += w * s.beta1;
        t.beta2 += w * s.beta2;
        t.terminal_c += w * s.terminal_c;
        t.sigma += w * s.sigma;
        t.data_rate.base += w * s.data_rate.base;
        t.data_rate.amplitude += w * s.data_rate.amplitude;
        t.data_rate.period += w * s.data_rate.period;
        for (int i = 0; i < f.grid.n_q; ++i) m.rho0[g][i] += w * f.rho0[k][i];
    }
    // Merged types keep the 0..1 theta convention; a single merged type sits at
    // the population mean.
    for (int g = 0; g < k_target; ++g)
        m.types[g].theta = k_target == 1 ? std::clamp(theta[0], 0.0, 1.0) : static_cast<double>(g) / (k_target - 1);
    for (auto& r : m.rho0) normalize_slice(r, f.grid.dq);
    return m;
}

FleetConfig scale_heterogeneity(const FleetConfig& f, double factor) {
    if (!(factor > 0)) throw ConfigError("heterogeneity scale must be positive");
    FleetConfig out = f;
    double b1 = 0, b2 = 0, d = 0;
    for (int k = 0; k < f.k_types; ++k) {
        b1 += f.proportions[k] * f.types[k].beta1;
        b2 += f.proportions[k] * f.types[k].beta2;
        d += f.proportions[k] * f.types[k].data_rate.base;
    }
    for (int k = 0; k < f.k_types; ++k) {
        auto& t = out.types[k];
        t.beta1 = std::max(1e-3, b1 + factor * (f.types[k].beta1 - b1));
        t.beta2 = std::max(1e-3, b2 + factor * (f.types[k].beta2 - b2));
        t.data_rate.base = std::max(0.0, d + factor * (f.types[k].data_rate.base - d));
    }
    return out;
}

}  // namespace hmfg
