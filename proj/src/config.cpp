#include "hmfg/config.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hmfg/errors.hpp"

namespace hmfg {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Reads the keys of one JSON object and rejects the ones nobody asked for.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config key '" + name_ + "." + key + "': " + e.what());
        }
    }

    const json* raw(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ConfigError("unknown config key '" + name_ + "." + k + "'");
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

std::string scenario_name(LeoScenario s) {
    switch (s) {
        case LeoScenario::Static: return "static";
        case LeoScenario::Slow: return "slow";
        case LeoScenario::Fast: return "fast";
    }
    return "static";
}

void read_grid(const json& j, RunConfig& c) {
    Section s(j, "grid");
    int n_q = c.grid.n_q, n_t = c.grid.n_t;
    double q_max = c.grid.q_max, horizon = c.grid.horizon_t;
    s.get("n_q", n_q);
    s.get("n_t", n_t);
    s.get("q_max", q_max);
    s.get("horizon_t", horizon);
    s.finish();
    c.grid = make_grid(n_q, n_t, q_max, horizon);
}

void read_error_model(const json& j, ErrorModelParams& p) {
    Section s(j, "error_model");
    s.get("c1", p.c1);
    s.get("c2", p.c2);
    s.get("c3", p.c3);
    s.get("alpha", p.alpha);
    s.get("beta_exp", p.beta_exp);
    s.get("delta_init", p.delta_init);
    s.finish();
    validate(p);
}

void read_channel(const json& j, ChannelParams& ch) {
    Section s(j, "channel");
    s.get("bandwidth_b", ch.bandwidth_b);
    s.get("noise", ch.noise);
    s.get("p_max", ch.p_max);
    s.get("carrier_hz", ch.carrier_hz);
    s.get("d0", ch.d0);
    s.get("d_max", ch.d_max);
    s.get("shadowing_db", ch.shadowing_db);
    s.get("bits_per_unit", ch.bits_per_unit);
    s.get("energy_scale", ch.energy_scale);
    s.get("cross_gain", ch.cross_gain);
    s.get("reference_distance", ch.reference_distance);
    s.finish();
    validate(ch);
}

void read_solver(const json& j, SolverConfig& sc) {
    Section s(j, "solver");
    s.get("max_iterations", sc.max_iterations);
    s.get("tolerance", sc.tolerance);
    if (const json* step = s.raw("step")) {
        if (step->is_string() && step->get<std::string>() == "adaptive") sc.step = StepMode::adaptive();
        else if (step->is_number()) sc.step = StepMode::fixed(step->get<double>());
        else throw ConfigError("config key 'solver.step' must be \"adaptive\" or a step product");
    }
    s.get("safety_margin", sc.safety_margin);
    s.get("lipschitz_l", sc.lipschitz_l);
    s.get("primal_dual_ratio", sc.primal_dual_ratio);
    s.get("momentum_step_scale", sc.momentum_step_scale);
    s.get("kappa", sc.price.kappa);
    s.get("varrho", sc.price.varrho);
    s.get("divergence_bound", sc.divergence_bound);
    s.finish();
}

void read_leo(const json& j, RunConfig& c) {
    Section s(j, "leo");
    std::string scenario = scenario_name(c.leo_scenario);
    s.get("scenario", scenario);
    c.leo_scenario = parse_leo_scenario(scenario);
    s.get("delta_tau", c.leo.delta_tau);
    s.get("rate_low", c.leo.rate_low);
    s.get("rate_high", c.leo.rate_high);
    s.get("mu", c.leo.mu);
    s.get("links_per_path", c.leo.links_per_path);
    s.get("i_sat_bound", c.leo.i_sat_bound);
    s.get("c_leo", c.c_leo);
    s.finish();
}

void read_fleet(const json& j, FleetSection& f) {
    Section s(j, "fleet");
    s.get("n_vehicles", f.n_vehicles);
    s.get("k_types", f.k_types);
    s.get("native_types", f.native_types);
    s.get("proportions", f.proportions);
    s.get("heterogeneity_scale", f.heterogeneity_scale);
    s.finish();
    if (f.n_vehicles < 1 || f.k_types < 1 || f.native_types < 1)
        throw ConfigError("fleet: n_vehicles, k_types and native_types must be positive");
    if (!(f.heterogeneity_scale > 0)) throw ConfigError("fleet.heterogeneity_scale must be positive");
}

void read_trial(const json& j, TrialConfig& t) {
    Section s(j, "trial");
    s.get("trials", t.trials);
    if (const json* snr = s.raw("snr_db")) {
        if (snr->is_null()) t.snr_db.reset();
        else if (snr->is_number()) t.snr_db = snr->get<double>();
        else throw ConfigError("config key 'trial.snr_db' must be a number or null");
    }
    s.get("qos_threshold_ms", t.qos_threshold_ms);
    s.get("rate_floor_bps", t.rate_floor_bps);
    s.get("delay_cap_s", t.delay_cap_s);
    s.finish();
}

void read_experiment(const json& j, ExperimentSection& e) {
    Section s(j, "experiment");
    s.get("n_grid", e.n_grid);
    s.get("methods", e.methods);
    s.get("trace_k", e.trace_k);
    s.get("trace_iterations", e.trace_iterations);
    s.get("timing_reps", e.timing_reps);
    s.get("timing_iterations", e.timing_iterations);
    s.get("timing_fixed_k", e.timing_fixed_k);
    s.get("rate_sizes", e.rate_sizes);
    s.get("rate_trials", e.rate_trials);
    s.get("cdf_trials", e.cdf_trials);
    s.get("heterogeneity_scales", e.heterogeneity_scales);
    s.get("unbalanced_proportions", e.unbalanced_proportions);
    s.get("leo_check_horizon_s", e.leo_check_horizon_s);
    s.get("workers", e.workers);
    s.finish();
    for (std::size_t i = 1; i < e.n_grid.size(); ++i)
        if (e.n_grid[i] <= e.n_grid[i - 1]) throw ConfigError("experiment.n_grid must be strictly ascending");
    for (int n : e.n_grid)
        if (n < 1) throw ConfigError("experiment.n_grid entries must be positive");
    for (const auto& m : e.methods) parse_method(m);
    if (e.timing_reps < 5) throw ConfigError("experiment.timing_reps must be at least 5");
    if (e.timing_iterations < 1 || e.trace_iterations < 1 || e.cdf_trials < 1 || e.rate_trials < 1)
        throw ConfigError("experiment: iteration and trial counts must be positive");
    if (e.workers < 0) throw ConfigError("experiment.workers must be nonnegative");
}

}  // namespace

LeoSelection RunConfig::leo_selection() const {
    LeoSelection s;
    s.delta_phi = scenario_delta_phi(leo_scenario);
    s.horizon_t = grid.horizon_t;
    s.delta_tau = leo.delta_tau;
    s.c_leo = c_leo;
    return s;
}

ComparisonSetup RunConfig::comparison_setup(const std::vector<Snapshot>& snapshots) const {
    ComparisonSetup s;
    s.grid = grid;
    s.native_types = fleet.native_types;
    s.native_proportions = fleet.proportions;
    s.heterogeneity_scale = fleet.heterogeneity_scale;
    s.channel = channel;
    s.solver = solver;
    s.solver.price.mu = leo.mu;
    s.error_model = error_model;
    s.leo_selection = leo_selection();
    s.snapshots = snapshots;
    return s;
}

RunConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    Section top(root, "<root>");
    top.get("seed", c.seed);
    if (const json* j = top.raw("grid")) read_grid(*j, c);
    if (const json* j = top.raw("error_model")) read_error_model(*j, c.error_model);
    if (const json* j = top.raw("channel")) read_channel(*j, c.channel);
    if (const json* j = top.raw("solver")) read_solver(*j, c.solver);
    if (const json* j = top.raw("leo")) read_leo(*j, c);
    if (const json* j = top.raw("fleet")) read_fleet(*j, c.fleet);
    if (const json* j = top.raw("trial")) read_trial(*j, c.trial);
    if (const json* j = top.raw("experiment")) read_experiment(*j, c.experiment);
    top.finish();
    validate(c.solver);
    c.leo.delta_phi_bound = scenario_delta_phi(c.leo_scenario);
    validate(c.leo);
    c.trial.rng_seed = c.seed;
    validate(c.trial);
    return c;
}

RunConfig load_config(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot read config file " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string canonical_json(const RunConfig& c) {
    ordered_json j;
    j["seed"] = c.seed;
    j["grid"] = {{"n_q", c.grid.n_q}, {"n_t", c.grid.n_t}, {"q_max", c.grid.q_max}, {"horizon_t", c.grid.horizon_t}};
    const auto& e = c.error_model;
    j["error_model"] = {{"c1", e.c1},       {"c2", e.c2},           {"c3", e.c3},
                        {"alpha", e.alpha}, {"beta_exp", e.beta_exp}, {"delta_init", e.delta_init}};
    const auto& ch = c.channel;
    j["channel"] = {{"bandwidth_b", ch.bandwidth_b},   {"noise", ch.noise},
                    {"p_max", ch.p_max},               {"carrier_hz", ch.carrier_hz},
                    {"d0", ch.d0},                     {"d_max", ch.d_max},
                    {"shadowing_db", ch.shadowing_db}, {"bits_per_unit", ch.bits_per_unit},
                    {"energy_scale", ch.energy_scale}, {"cross_gain", ch.cross_gain},
                    {"reference_distance", ch.reference_distance}};
    const auto& s = c.solver;
    ordered_json step = s.step.kind == StepMode::Kind::Adaptive ? ordered_json("adaptive") : ordered_json(s.step.product);
    j["solver"] = {{"max_iterations", s.max_iterations},
                   {"tolerance", s.tolerance},
                   {"step", step},
                   {"safety_margin", s.safety_margin},
                   {"lipschitz_l", s.lipschitz_l},
                   {"primal_dual_ratio", s.primal_dual_ratio},
                   {"momentum_step_scale", s.momentum_step_scale},
                   {"kappa", s.price.kappa},
                   {"varrho", s.price.varrho},
                   {"divergence_bound", s.divergence_bound}};
    j["leo"] = {{"scenario", scenario_name(c.leo_scenario)},
                {"delta_tau", c.leo.delta_tau},
                {"rate_low", c.leo.rate_low},
                {"rate_high", c.leo.rate_high},
                {"mu", c.leo.mu},
                {"links_per_path", c.leo.links_per_path},
                {"i_sat_bound", c.leo.i_sat_bound},
                {"c_leo", c.c_leo}};
    j["fleet"] = {{"n_vehicles", c.fleet.n_vehicles},
                  {"k_types", c.fleet.k_types},
                  {"native_types", c.fleet.native_types},
                  {"proportions", c.fleet.proportions},
                  {"heterogeneity_scale", c.fleet.heterogeneity_scale}};
    j["trial"] = {{"trials", c.trial.trials},
                  {"snr_db", c.trial.snr_db ? ordered_json(*c.trial.snr_db) : ordered_json(nullptr)},
                  {"qos_threshold_ms", c.trial.qos_threshold_ms},
                  {"rate_floor_bps", c.trial.rate_floor_bps},
                  {"delay_cap_s", c.trial.delay_cap_s}};
    const auto& x = c.experiment;
    j["experiment"] = {{"n_grid", x.n_grid},
                       {"methods", x.methods},
                       {"trace_k", x.trace_k},
                       {"trace_iterations", x.trace_iterations},
                       {"timing_reps", x.timing_reps},
                       {"timing_iterations", x.timing_iterations},
                       {"timing_fixed_k", x.timing_fixed_k},
                       {"rate_sizes", x.rate_sizes},
                       {"rate_trials", x.rate_trials},
                       {"cdf_trials", x.cdf_trials},
                       {"heterogeneity_scales", x.heterogeneity_scales},
                       {"unbalanced_proportions", x.unbalanced_proportions},
                       {"leo_check_horizon_s", x.leo_check_horizon_s},
                       {"workers", x.workers}};
    return j.dump();
}

std::string config_hash(const RunConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_json(c)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

void write_csv_metadata(std::ostream& os, const RunConfig& c) {
    os << "# config_hash=" << config_hash(c) << ",seed=" << c.seed << '\n';
}

}  // namespace hmfg
