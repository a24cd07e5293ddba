#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hmfg/config.hpp"
#include "hmfg/fleet_sim.hpp"
#include "hmfg/granularity.hpp"
#include "hmfg/transport.hpp"

namespace hmfg {

// n_points log-spaced integers from lo to hi inclusive, deduplicated.
std::vector<int> log_spaced_ints(double lo, double hi, int n_points);

// Files written by one category and whether every cell succeeded.
struct CategoryOutcome {
    std::vector<std::filesystem::path> files;
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

// Category I: type-count scaling and the empirical transport rate.
struct ScalingRow {
    int n = 0;
    double k_continuous = 0;
    int k_star = 0;
    int k_exhaustive = 0;
    double e_star = 0;
    double e_gprox = 0;
    double reduction_pct = 0;
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
    std::optional<SlopeFit> k_continuous_slope, k_exhaustive_slope, e_star_slope;
    std::vector<RateRow> rate;
    std::optional<SlopeFit> w1_slope, w2_slope;
};

// Exhaustive search range 1..max(20, floor(sqrt(n))).
int exhaustive_upper(int n);

ScalingReport run_scaling(const RunConfig& cfg, const std::vector<int>& n_grid);

// Category II: residual traces and per-iteration timing.
struct Trace {
    int k = 0;
    std::string mode;  // adaptive, fixed_0.99, fixed_0.70
    std::vector<IterationRecord> history;
    bool diverged = false;
};

struct TimingRow {
    int n = 0;
    int k = 0;
    double median_iteration_ms = 0;
    int reps = 0;
};

struct ConvergenceReport {
    std::vector<Trace> traces;
    std::vector<TimingRow> timing_kstar, timing_fixed_k;
    std::optional<SlopeFit> timing_slope;
    double fixed_k_time_ratio = 0;  // max/min over N
};

// Residual at a 1-based iteration (the last one if the trace is shorter).
double residual_at(const Trace& t, int iteration);

std::vector<Trace> run_traces(const RunConfig& cfg, const std::vector<int>& ks, int iterations);

// Median per-iteration wall time of `reps` runs (after one warm-up run) of a
// reference fleet with k types and n vehicles.
TimingRow time_iterations(const RunConfig& cfg, int n, int k, int iterations, int reps);

ConvergenceReport run_convergence(const RunConfig& cfg, const std::vector<int>& n_grid);

// Category III: KPI comparison.
struct SignRow {
    int n = 0;
    std::string baseline;
    std::string kpi;
    SignTest test;
};

struct KpiExperimentReport {
    std::vector<ComparisonCell> cells;      // experiment.trial.trials per cell
    std::vector<ComparisonCell> cdf_cells;  // experiment.cdf_trials per cell
    std::vector<SignRow> signs;             // proposed against each baseline
    std::vector<std::pair<double, std::vector<ComparisonCell>>> sweep;  // heterogeneity scale sweep
};

std::vector<SignRow> sign_tests(const std::vector<ComparisonCell>& cells);

KpiExperimentReport run_kpi(const RunConfig& cfg, const std::vector<int>& n_grid,
                            const std::vector<Snapshot>& snapshots);

// Category IV: unbalanced fleets.
struct UnbalancedRow {
    int n = 0;
    double lambda_min = 0;
    double k_balanced = 0, k_unbalanced = 0, ratio = 0;
    int k_star_balanced = 0, k_star_unbalanced = 0;
    double e_balanced = 0, e_unbalanced = 0;
};

std::vector<UnbalancedRow> run_unbalanced(const RunConfig& cfg, const std::vector<int>& n_grid);

// Category V: LEO topology dynamics.
struct LeoRow {
    std::string scenario;
    int n = 0;
    double delta_phi = 0;
    double delta_leo = 0;
    double k_continuous = 0;
    int k_star = 0;
    double e_static = 0;       // reduced error at the static K*
    double e_leo = 0;          // static error plus the LEO perturbation
    double perturbation_pct = 0;
    bool order_condition = false;
    double order_margin = 0;
    int windows = 0;
    double max_adjacent_dphi = 0;
    bool constant_fallback = false;
};

std::vector<LeoRow> run_leo(const RunConfig& cfg, const std::vector<int>& n_grid);

// Largest |phi_sat| change between adjacent windows.
double max_adjacent_phi_change(const std::vector<Snapshot>& s, double mu);

// Snapshots the run uses over its solver horizon.
std::vector<Snapshot> run_snapshots(const RunConfig& cfg);

// Run category 1..5 and write its CSV files under out_dir.
CategoryOutcome run_category(int category, const RunConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace hmfg
