#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hmfg/fleet_sim.hpp"
#include "hmfg/granularity.hpp"
#include "hmfg/grid.hpp"
#include "hmfg/leo.hpp"
#include "hmfg/params.hpp"
#include "hmfg/solver.hpp"

namespace hmfg {

struct FleetSection {
    int n_vehicles = 500;
    int k_types = 3;          // types of the fleet used by `solve`
    int native_types = 24;    // native types of the comparison fleet
    std::vector<double> proportions;  // empty means balanced
    double heterogeneity_scale = 1.0;
};

struct ExperimentSection {
    std::vector<int> n_grid;  // empty means the category default
    std::vector<std::string> methods = {"proposed", "gprox_k1", "smfg_k1", "fixed_k2", "fixed_k3"};
    std::vector<int> trace_k = {1, 3, 5};
    int trace_iterations = 200;
    int timing_reps = 5;
    int timing_iterations = 20;
    int timing_fixed_k = 5;
    std::vector<int> rate_sizes = {100, 300, 1000, 3000, 10000};
    int rate_trials = 50;
    int cdf_trials = 80;
    std::vector<double> heterogeneity_scales;  // empty skips the sweep
    std::vector<double> unbalanced_proportions = {0.7, 0.2, 0.1};
    double leo_check_horizon_s = 3600.0;
    int workers = 0;  // 0 defers to HMFG_WORKERS, then the hardware
};

struct RunConfig {
    std::uint64_t seed = 1;
    Grid grid = make_grid(50, 60, 10.0, 0.06);
    ErrorModelParams error_model;
    ChannelParams channel;
    SolverConfig solver;
    LeoConfig leo;
    LeoScenario leo_scenario = LeoScenario::Static;
    double c_leo = LeoSelection{}.c_leo;
    FleetSection fleet;
    TrialConfig trial;
    ExperimentSection experiment;

    // LEO terms of Algorithm-1 style type selection for this run.
    LeoSelection leo_selection() const;
    ComparisonSetup comparison_setup(const std::vector<Snapshot>& snapshots) const;
};

// Reads JSON; every section and key is optional, unknown ones throw ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& p);

// Canonical JSON of the resolved configuration (all keys, fixed order).
std::string canonical_json(const RunConfig& c);

// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string config_hash(const RunConfig& c);

// "# config_hash=<hash>,seed=<seed>" followed by a newline.
void write_csv_metadata(std::ostream& os, const RunConfig& c);

}  // namespace hmfg
