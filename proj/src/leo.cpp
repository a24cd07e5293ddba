#include "hmfg/leo.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "hmfg/errors.hpp"

namespace hmfg {

void validate(const LeoConfig& c) {
    if (!(c.delta_tau > 0)) throw ConfigError("leo: delta_tau must be positive");
    if (!(c.rate_low > 0 && c.rate_low <= c.rate_high)) throw ConfigError("leo: need 0 < rate_low <= rate_high");
    if (c.mu < 0 || c.delta_phi_bound < 0 || c.i_sat_bound < 0) throw ConfigError("leo: mu, bounds must be >= 0");
    if (c.links_per_path < 1) throw ConfigError("leo: links_per_path must be positive");
}

LeoScenario parse_leo_scenario(const std::string& s) {
    if (s == "static") return LeoScenario::Static;
    if (s == "slow") return LeoScenario::Slow;
    if (s == "fast") return LeoScenario::Fast;
    throw ConfigError("unknown LEO scenario '" + s + "' (expected static, slow or fast)");
}

double scenario_delta_phi(LeoScenario s) {
    switch (s) {
        case LeoScenario::Static: return 0.0;
        case LeoScenario::Slow: return 0.01;
        case LeoScenario::Fast: return 0.05;
    }
    return 0.0;
}

double bottleneck_bandwidth(const Snapshot& s) {
    if (s.link_rates.empty()) throw PreconditionError("snapshot has no links");
    return *std::min_element(s.link_rates.begin(), s.link_rates.end());
}

double phi_sat(const Snapshot& s, double mu) {
    double b = bottleneck_bandwidth(s);
    if (!(b > 0)) throw PreconditionError("snapshot bottleneck must be positive");
    return mu / b;
}

double delta_sat(const Snapshot& prev, const Snapshot& curr, double mu) {
    double bp = bottleneck_bandwidth(prev), bc = bottleneck_bandwidth(curr);
    return mu * std::abs(bc - bp) / (bc * bc);
}

SnapshotTrace generate_snapshots(const LeoConfig& cfg, double horizon_t, std::uint64_t rng_seed) {
    validate(cfg);
    if (!(horizon_t > 0)) throw PreconditionError("generate_snapshots: horizon must be positive");
    const int windows = static_cast<int>(std::ceil(horizon_t / cfg.delta_tau - 1e-12));
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> rate(cfg.rate_low, cfg.rate_high);
    std::uniform_real_distribution<double> isat(0.0, cfg.i_sat_bound);

    auto draw = [&](int w) {
        Snapshot s;
        s.window_index = w;
        s.start_time = w * cfg.delta_tau;
        s.end_time = s.start_time + cfg.delta_tau;
        s.link_rates.resize(cfg.links_per_path);
        for (double& r : s.link_rates) r = rate(rng);
        s.i_sat = cfg.i_sat_bound > 0 ? isat(rng) : 0.0;
        return s;
    };

    SnapshotTrace out;
    out.windows.push_back(draw(0));
    bool ok = cfg.delta_phi_bound > 0 || cfg.rate_low == cfg.rate_high;
    for (int w = 1; ok && w < windows; ++w) {
        const double prev = phi_sat(out.windows.back(), cfg.mu);
        bool placed = false;
        for (int attempt = 1; attempt <= 1000; ++attempt) {
            Snapshot s = draw(w);
            out.max_attempts_used = std::max(out.max_attempts_used, attempt);
            if (std::abs(phi_sat(s, cfg.mu) - prev) <= cfg.delta_phi_bound) {
                out.windows.push_back(std::move(s));
                placed = true;
                break;
            }
        }
        ok = placed;
    }
    if (!ok) {
        out.constant_fallback = true;
        Snapshot base = out.windows.front();
        out.windows.clear();
        for (int w = 0; w < windows; ++w) {
            Snapshot s = base;
            s.window_index = w;
            s.start_time = w * cfg.delta_tau;
            s.end_time = s.start_time + cfg.delta_tau;
            out.windows.push_back(std::move(s));
        }
    }
    return out;
}

const Snapshot& snapshot_at(const std::vector<Snapshot>& s, double t) {
    if (s.empty()) throw PreconditionError("empty snapshot trace");
    for (const auto& w : s)
        if (t < w.end_time) return w;
    return s.back();
}

double max_delta_sat(const std::vector<Snapshot>& s, double mu) {
    double m = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) m = std::max(m, delta_sat(s[i - 1], s[i], mu));
    return m;
}

OrderCondition check_order_optimality_condition(double n, double delta_phi, const ErrorModelParams& p, double c) {
    if (!(n >= 1)) throw DomainError("order condition: n must be at least 1");
    double bound = c * std::pow(n, -p.alpha * p.beta_exp / (p.alpha + p.beta_exp));
    return {delta_phi <= bound, delta_phi / bound};
}

void write_snapshots_csv(std::ostream& os, const std::vector<Snapshot>& s, double mu) {
    os << "window_index,start,end,bottleneck_mbps,phi_sat\n";
    os.precision(17);
    for (const auto& w : s)
        os << w.window_index << ',' << w.start_time << ',' << w.end_time << ',' << bottleneck_bandwidth(w) << ','
           << phi_sat(w, mu) << '\n';
}

std::vector<Snapshot> read_snapshots_csv(std::istream& is) {
    std::vector<Snapshot> out;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
        if (v.size() < 4) throw ConfigError("snapshot csv: short row");
        Snapshot s;
        s.window_index = static_cast<int>(v[0]);
        s.start_time = v[1];
        s.end_time = v[2];
        s.link_rates = {v[3]};
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace hmfg
