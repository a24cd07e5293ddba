#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hmfg/granularity.hpp"

namespace hmfg {

struct Snapshot {
    int window_index = 0;
    std::vector<double> link_rates;  // Mbps along the selected path
    double start_time = 0.0;
    double end_time = 0.0;
    double i_sat = 0.0;              // residual downlink interference, W
};

struct LeoConfig {
    double delta_tau = 60.0;
    double rate_low = 300.0;
    double rate_high = 350.0;
    double mu = 0.5;
    double delta_phi_bound = 0.05;
    int links_per_path = 4;
    double i_sat_bound = 0.0;
};

void validate(const LeoConfig& c);

enum class LeoScenario { Static, Slow, Fast };
LeoScenario parse_leo_scenario(const std::string& s);
double scenario_delta_phi(LeoScenario s);  // 0, 0.01, 0.05

double bottleneck_bandwidth(const Snapshot& s);
double phi_sat(const Snapshot& s, double mu);
double delta_sat(const Snapshot& prev, const Snapshot& curr, double mu);

struct SnapshotTrace {
    std::vector<Snapshot> windows;
    bool constant_fallback = false;  // bound unsatisfiable with random rates
    int max_attempts_used = 0;
};

SnapshotTrace generate_snapshots(const LeoConfig& cfg, double horizon_t, std::uint64_t rng_seed);

// Window active at time t (clamped to the trace).
const Snapshot& snapshot_at(const std::vector<Snapshot>& s, double t);

// Largest delta_sat over adjacent windows (0 for a single window).
double max_delta_sat(const std::vector<Snapshot>& s, double mu);

struct OrderCondition {
    bool holds = false;
    double margin = 0.0;  // delta_phi / (c n^-gamma)
};

OrderCondition check_order_optimality_condition(double n, double delta_phi, const ErrorModelParams& p,
                                                double c = 1.0);

void write_snapshots_csv(std::ostream& os, const std::vector<Snapshot>& s, double mu);
std::vector<Snapshot> read_snapshots_csv(std::istream& is);

}  // namespace hmfg
