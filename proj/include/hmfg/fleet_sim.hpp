#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hmfg/leo.hpp"
#include "hmfg/params.hpp"
#include "hmfg/solver.hpp"

namespace hmfg {

struct TrialConfig {
    int n_vehicles = 500;
    int trials = 25;
    std::uint64_t rng_seed = 1;
    std::optional<double> snr_db;  // replaces every vehicle's gain so that p_max g / noise hits this SNR
    double qos_threshold_ms = 100.0;
    double rate_floor_bps = 1e3;
    double delay_cap_s = 10.0;
};

void validate(const TrialConfig& c);

struct VehiclePath {
    int native_type = 0;
    int solution_type = 0;
    double gain = 0.0;
    // One entry per simulation step (n_t steps), states at the step start.
    std::vector<double> queue, power, rate;
    double generated = 0.0;    // initial backlog plus net arrivals
    double transmitted = 0.0;
    double dropped = 0.0;
    double final_queue = 0.0;
};

struct TrialPaths {
    std::vector<VehiclePath> vehicles;
    std::vector<double> price;  // per step
    double dt = 0.0;
    double q_max = 0.0;
};

// Euler-Maruyama over the solution grid with Skorokhod reflection at 0 and
// clipping at q_max. Noise, gains and initial queues depend only on
// (seed, vehicle index), so two solutions simulated with one seed are paired.
TrialPaths simulate_trial(const EquilibriumSolution& sol, const FleetConfig& fleet, const ChannelParams& ch,
                          const TrialConfig& cfg, const std::vector<Snapshot>& snapshots, std::uint64_t seed);

struct KpiReport {
    double mean_delay_ms = 0;
    double throughput_mbps = 0;
    double energy_per_bit_nj = 0;
    double packet_loss_pct = 0;
    double spectral_efficiency_bpshz = 0;
    double mec_cost = 0;
    double qos_satisfaction_pct = 0;
    bool no_generated_data = false;

    // Per-trial KPI values and per-vehicle mean delays, filled by aggregation.
    std::vector<KpiReport> per_trial;
    std::vector<double> vehicle_delays_ms;
};

KpiReport compute_kpis(const TrialPaths& paths, const ChannelParams& ch, const TrialConfig& cfg);

// Means over trials; per_trial and vehicle_delays_ms keep the raw values.
KpiReport aggregate(const std::vector<KpiReport>& trials);

struct KpiStats {
    double mean = 0, stddev = 0;
};

const std::vector<std::string>& kpi_names();
double kpi_value(const KpiReport& r, const std::string& name);
KpiStats kpi_stats(const KpiReport& aggregated, const std::string& name);

// Trial seeds are derived from the base seed and the trial index only.
std::uint64_t trial_seed(std::uint64_t base, int trial);

KpiReport run_trials(const EquilibriumSolution& sol, const FleetConfig& fleet, const ChannelParams& ch,
                     const TrialConfig& cfg, const std::vector<Snapshot>& snapshots);

enum class Method { Proposed, GproxK1, SmfgK1, FixedK2, FixedK3 };
Method parse_method(const std::string& s);
std::string to_string(Method m);

struct ComparisonCell {
    Method method = Method::Proposed;
    int n = 0;
    int k_types = 0;
    bool failed = false;
    std::string error;
    KpiReport kpis;
};

struct ComparisonSetup {
    Grid grid = make_grid(50, 60, 10.0, 0.06);
    int native_types = 24;
    std::vector<double> native_proportions;  // empty means balanced
    double heterogeneity_scale = 1.0;
    ChannelParams channel;
    SolverConfig solver;
    ErrorModelParams error_model;
    LeoSelection leo_selection;
    std::vector<Snapshot> snapshots;
};

// The fleet every method is compared on: native_types reference types at n vehicles.
FleetConfig comparison_fleet(const ComparisonSetup& setup, int n);

// Solution used by a method for a given native fleet; the proposed method
// merges to the selected K*(n).
EquilibriumSolution solve_method(Method m, const FleetConfig& fleet, const ComparisonSetup& setup);

std::vector<ComparisonCell> run_comparison(const std::vector<Method>& methods, const std::vector<int>& n_grid,
                                           const ComparisonSetup& setup, const TrialConfig& trial,
                                           int workers = 1);

struct SignTest {
    int wins = 0, losses = 0, ties = 0;
    double p_value = 1.0;  // one-sided, H1: wins are more likely than losses
};

// Paired sign test of a[i] against b[i]; a "win" is better(a[i], b[i]).
SignTest paired_sign_test(const std::vector<double>& a, const std::vector<double>& b, bool lower_is_better);

void write_kpi_csv(std::ostream& os, const std::vector<ComparisonCell>& cells, int trials, std::uint64_t seed);
void write_cdf_csv(std::ostream& os, const std::vector<ComparisonCell>& cells);

// Mean positive gap between the cost a probe vehicle pays under the solution's
// policy and its best response to the frozen mean field, over n_probe probes.
double empirical_nash_gap(const EquilibriumSolution& sol, const FleetConfig& fleet, int n_probe,
                          const std::vector<Snapshot>& snapshots, std::uint64_t seed);

// Expected cost-to-go of following `power` (policy of one solution type) for a
// vehicle of type tp, on the same upwind scheme as the HJB sweep.
DualPotential policy_value(const PowerField& power, const TypeParams& tp, const ChannelParams& ch,
                           const Coupling& coupling);

}  // namespace hmfg
