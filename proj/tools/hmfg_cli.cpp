#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hmfg/config.hpp"
#include "hmfg/errors.hpp"
#include "hmfg/experiments.hpp"
#include "hmfg/fleet_sim.hpp"
#include "hmfg/granularity.hpp"
#include "hmfg/solver.hpp"
#include "hmfg/workers.hpp"

namespace fs = std::filesystem;
using namespace hmfg;

namespace {

struct Common {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "JSON configuration file");
    app->add_option("--out", c.out, "Output directory");
    app->add_option("--seed", c.seed, "Override the configured seed");
}

RunConfig resolve(const Common& c) {
    RunConfig cfg = c.config.empty() ? parse_config("{}") : load_config(c.config);
    if (c.seed) {
        cfg.seed = *c.seed;
        cfg.trial.rng_seed = *c.seed;
    }
    return cfg;
}

std::ofstream open_out(const Common& c, const std::string& name, const RunConfig& cfg) {
    fs::create_directories(c.out);
    const fs::path p = fs::path(c.out) / name;
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os.precision(10);
    write_csv_metadata(os, cfg);
    return os;
}

std::vector<double> parse_csv_doubles(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("not a number: '" + tok + "'");
        }
    }
    return v;
}

// Column index by header name, skipping '#' comment lines.
std::vector<std::pair<double, double>> read_xy(const std::string& path, const std::string& xcol,
                                               const std::string& ycol) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    std::vector<std::string> header;
    std::vector<std::pair<double, double>> pts;
    int xi = -1, yi = -1;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (header.empty()) {
            header = cells;
            for (int i = 0; i < static_cast<int>(header.size()); ++i) {
                if (header[i] == xcol) xi = i;
                if (header[i] == ycol) yi = i;
            }
            if (xi < 0 || yi < 0) throw ConfigError("columns '" + xcol + "'/'" + ycol + "' not in " + path);
            continue;
        }
        if (std::max(xi, yi) >= static_cast<int>(cells.size()) || cells[xi].empty() || cells[yi].empty()) continue;
        pts.emplace_back(std::stod(cells[xi]), std::stod(cells[yi]));
    }
    return pts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heterogeneous mean-field-game fleet toolkit"};
    app.require_subcommand(1);

    Common sel_c, solve_c, sim_c, exp_c, fit_c;

    auto* sel = app.add_subcommand("select-k", "Optimal type count for a fleet size");
    add_common(sel, sel_c);
    std::optional<int> sel_n;
    std::string sel_props, sel_leo;
    sel->add_option("--n", sel_n, "Fleet size (default fleet.n_vehicles)");
    sel->add_option("--proportions", sel_props, "Comma-separated class proportions (default balanced)");
    sel->add_option("--leo", sel_leo, "LEO scenario: static, slow or fast")
        ->check(CLI::IsMember({"static", "slow", "fast"}));

    auto* solve = app.add_subcommand("solve", "Solve the K-type equilibrium of the configured fleet");
    add_common(solve, solve_c);
    std::optional<int> solve_k;
    solve->add_option("--k", solve_k, "Number of types (default fleet.k_types)");

    auto* sim = app.add_subcommand("simulate", "Monte Carlo KPIs of the configured methods at fleet.n_vehicles");
    add_common(sim, sim_c);
    std::vector<std::string> sim_methods;
    sim->add_option("--method", sim_methods, "Methods (default experiment.methods)");

    auto* exp = app.add_subcommand("experiment", "Run an experiment category");
    add_common(exp, exp_c);
    int category = 0;
    exp->add_option("category", category, "Category 1..5")->required()->check(CLI::Range(1, 5));

    auto* fit = app.add_subcommand("fit-slope", "Log-log slope of two CSV columns");
    add_common(fit, fit_c);
    std::string fit_input, fit_x, fit_y;
    fit->add_option("--input", fit_input, "CSV file")->required();
    fit->add_option("--x", fit_x, "x column")->required();
    fit->add_option("--y", fit_y, "y column")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sel) {
            RunConfig cfg = resolve(sel_c);
            if (!sel_leo.empty()) cfg.leo_scenario = parse_leo_scenario(sel_leo);
            const int n = sel_n.value_or(cfg.fleet.n_vehicles);
            std::vector<double> props = sel_props.empty() ? std::vector<double>{1.0} : parse_csv_doubles(sel_props);
            const GranularityResult r = select_type_count(n, props, cfg.error_model, cfg.leo_selection());
            nlohmann::ordered_json j = {{"n", n},
                                        {"k_continuous", r.k_continuous},
                                        {"k_star", r.k_star},
                                        {"n_effective", r.n_effective},
                                        {"delta_leo", r.delta_leo},
                                        {"c1_effective", r.c1_effective},
                                        {"gamma", r.gamma},
                                        {"config_hash", config_hash(cfg)},
                                        {"seed", cfg.seed}};
            std::cout << j.dump(2) << '\n';
            if (sel->count("--out")) {
                fs::create_directories(sel_c.out);
                std::ofstream(fs::path(sel_c.out) / "select_k.json") << j.dump(2) << '\n';
            }
            return 0;
        }
        if (*solve) {
            const RunConfig cfg = resolve(solve_c);
            const int k = solve_k.value_or(cfg.fleet.k_types);
            const FleetConfig fleet = make_reference_fleet(cfg.grid, cfg.fleet.n_vehicles, k, cfg.fleet.proportions);
            SolverConfig sc = cfg.solver;
            sc.price.mu = cfg.leo.mu;
            const EquilibriumSolution s = pdhg_solve(fleet, cfg.channel, sc, run_snapshots(cfg));
            {
                auto os = open_out(solve_c, "solution.csv", cfg);
                write_solution_csv(os, s);
            }
            {
                auto os = open_out(solve_c, "residuals.csv", cfg);
                write_residual_csv(os, s);
            }
            {
                auto os = open_out(solve_c, "steplog.csv", cfg);
                os << "iteration,h_k,c_h,delta_sat,product,xi\n";
                for (const auto& h : s.history)
                    os << h.iteration << ',' << h.h_k << ',' << h.c_h << ',' << h.delta_sat << ',' << h.step_product
                       << ',' << h.xi << '\n';
            }
            std::cout << "K=" << k << " iterations=" << s.iterations << " residual=" << s.final_residual()
                      << " converged=" << (s.converged ? "yes" : "no") << '\n';
            return s.diverged ? 1 : 0;
        }
        if (*sim) {
            const RunConfig cfg = resolve(sim_c);
            std::vector<Method> methods;
            for (const auto& m : sim_methods.empty() ? cfg.experiment.methods : sim_methods)
                methods.push_back(parse_method(m));
            const auto cells = run_comparison(methods, {cfg.fleet.n_vehicles}, cfg.comparison_setup(run_snapshots(cfg)),
                                              cfg.trial, worker_count(cfg.experiment.workers));
            {
                auto os = open_out(sim_c, "kpi.csv", cfg);
                write_kpi_csv(os, cells, cfg.trial.trials, cfg.seed);
            }
            {
                auto os = open_out(sim_c, "delay_cdf.csv", cfg);
                write_cdf_csv(os, cells);
            }
            if (methods.size() > 1) {
                auto os = open_out(sim_c, "sign_tests.csv", cfg);
                os << "n,baseline,kpi,wins,losses,ties,p_value\n";
                for (const auto& s : sign_tests(cells))
                    os << s.n << ',' << s.baseline << ',' << s.kpi << ',' << s.test.wins << ',' << s.test.losses
                       << ',' << s.test.ties << ',' << s.test.p_value << '\n';
            }
            int failed = 0;
            for (const auto& c : cells)
                if (c.failed) {
                    std::cerr << to_string(c.method) << " failed: " << c.error << '\n';
                    ++failed;
                }
            return failed ? 1 : 0;
        }
        if (*exp) {
            const RunConfig cfg = resolve(exp_c);
            const CategoryOutcome o = run_category(category, cfg, exp_c.out);
            for (const auto& f : o.files) std::cout << f.string() << '\n';
            for (const auto& f : o.failures) std::cerr << "failed: " << f << '\n';
            return o.ok() ? 0 : 1;
        }
        if (*fit) {
            const RunConfig cfg = resolve(fit_c);
            const SlopeFit s = fit_loglog_slope(read_xy(fit_input, fit_x, fit_y));
            nlohmann::ordered_json j = {{"slope", s.slope}, {"intercept", s.intercept}, {"stderr", s.stderr_slope}};
            std::cout << j.dump(2) << '\n';
            if (fit->count("--out")) {
                auto os = open_out(fit_c, "fit.csv", cfg);
                os << "x,y,slope,intercept,stderr\n"
                   << fit_x << ',' << fit_y << ',' << s.slope << ',' << s.intercept << ',' << s.stderr_slope << '\n';
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
