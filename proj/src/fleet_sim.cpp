#include "hmfg/fleet_sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "hmfg/errors.hpp"
#include "hmfg/model.hpp"
#include "hmfg/transport.hpp"
#include "hmfg/workers.hpp"

namespace hmfg {

void validate(const TrialConfig& c) {
    if (c.n_vehicles < 1) throw ConfigError("trial: n_vehicles must be positive");
    if (c.trials < 1) throw ConfigError("trial: trials must be at least 1");
    if (!(c.qos_threshold_ms > 0) || !(c.rate_floor_bps > 0) || !(c.delay_cap_s > 0))
        throw ConfigError("trial: qos threshold, rate floor and delay cap must be positive");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(index + 1)));
}

double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Linear interpolation of one slice at state q (clamped to the grid).
double interp_state(std::span<const double> s, const Grid& g, double q) {
    double x = std::clamp(q / g.dq, 0.0, static_cast<double>(g.n_q - 1));
    int i = std::min(static_cast<int>(x), g.n_q - 2);
    double w = x - i;
    return (1.0 - w) * s[i] + w * s[i + 1];
}

double interp_bilinear(const Field& f, double q, double t) {
    const Grid& g = f.grid;
    double y = std::clamp(t / g.dt, 0.0, static_cast<double>(g.n_t));
    int j = std::min(static_cast<int>(y), g.n_t - 1);
    double w = y - j;
    return (1.0 - w) * interp_state(f.slice(j), g, q) + w * interp_state(f.slice(j + 1), g, q);
}

std::vector<int> native_type_of_vehicle(const FleetConfig& fleet, int n) {
    std::vector<int> counts = largest_remainder_counts(fleet.proportions, n);
    std::vector<int> out;
    out.reserve(n);
    for (int k = 0; k < fleet.k_types; ++k) out.insert(out.end(), counts[k], k);
    return out;
}

double sample_initial_queue(const FleetConfig& fleet, int k, double u) {
    const Grid& g = fleet.grid;
    auto cdf = cdf_nodes(GridSlice{fleet.rho0[k], g.dq});
    return inverse_cdf(cdf, g.dq, u);
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t base, int trial) { return splitmix64(base + 0x632be59bd9b4e019ULL * (trial + 1)); }

TrialPaths simulate_trial(const EquilibriumSolution& sol, const FleetConfig& fleet, const ChannelParams& ch,
                          const TrialConfig& cfg, const std::vector<Snapshot>& snapshots, std::uint64_t seed) {
    validate(cfg);
    validate(ch);
    const Grid& g = sol.grid;
    if (!(g == fleet.grid)) throw PreconditionError("simulate: solution and fleet grids differ");
    if (static_cast<int>(sol.type_map.size()) != fleet.k_types)
        throw PreconditionError("simulate: solution type map does not cover the fleet's types");
    if (static_cast<int>(sol.coupling.price.size()) != g.slices())
        throw PreconditionError("simulate: solution has no coupling trace");

    const int n = cfg.n_vehicles;
    const std::vector<int> native = native_type_of_vehicle(fleet, n);
    TrialPaths out;
    out.dt = g.dt;
    out.q_max = g.q_max;
    out.vehicles.resize(n);
    out.price.resize(g.n_t);
    for (int j = 0; j < g.n_t; ++j) out.price[j] = sol.coupling.price[j];

    std::vector<std::mt19937_64> rngs;
    rngs.reserve(n);
    std::vector<double> q(n);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        rngs.push_back(stream(seed, static_cast<std::uint64_t>(i)));
        auto& rng = rngs.back();
        VehiclePath& v = out.vehicles[i];
        v.native_type = native[i];
        v.solution_type = sol.type_map[native[i]];
        const double d = ch.d0 + (ch.d_max - ch.d0) * uniform01(rng);
        const double shadow_db = ch.shadowing_db * normal(rng);
        v.gain = std::pow(10.0, -(winner_b1_path_loss_db(d, ch.carrier_hz) + shadow_db) / 10.0);
        if (cfg.snr_db && ch.p_max > 0) v.gain = std::pow(10.0, *cfg.snr_db / 10.0) * ch.noise / ch.p_max;
        q[i] = sample_initial_queue(fleet, native[i], uniform01(rng));
        v.generated = q[i];
        v.queue.resize(g.n_t);
        v.power.resize(g.n_t);
        v.rate.resize(g.n_t);
    }

    const double sqdt = std::sqrt(g.dt);
    for (int j = 0; j < g.n_t; ++j) {
        const double t = g.t(j);
        double total_power = 0.0;
        for (int i = 0; i < n; ++i) {
            VehiclePath& v = out.vehicles[i];
            double p = std::clamp(interp_bilinear(sol.policies[v.solution_type], q[i], t), 0.0, ch.p_max);
            v.power[j] = p;
            total_power += p;
        }
        const double i_sat = snapshots.empty() ? 0.0 : snapshot_at(snapshots, t).i_sat;
        for (int i = 0; i < n; ++i) {
            VehiclePath& v = out.vehicles[i];
            const TypeParams& tp = fleet.types[v.native_type];
            const double interference = i_sat + ch.cross_gain * (total_power - v.power[j]);
            const double r = sinr_rate(v.power[j], v.gain, ch.noise, interference, ch.bandwidth_b) / ch.bits_per_unit;
            v.queue[j] = q[i];
            v.rate[j] = r;

            const double arrival = tp.data_rate(t) * g.dt + tp.sigma * sqdt * normal(rngs[i]);
            const double q1 = std::max(q[i] + arrival, 0.0);
            v.generated += q1 - q[i];
            const double served = std::min(r * g.dt, q1);
            v.transmitted += served;
            double q2 = q1 - served;
            if (q2 > g.q_max) {
                v.dropped += q2 - g.q_max;
                q2 = g.q_max;
            }
            q[i] = q2;
        }
    }
    for (int i = 0; i < n; ++i) out.vehicles[i].final_queue = q[i];
    return out;
}

KpiReport compute_kpis(const TrialPaths& paths, const ChannelParams& ch, const TrialConfig& cfg) {
    if (paths.vehicles.empty()) throw PreconditionError("kpis: no trajectories");
    const double floor_units = cfg.rate_floor_bps / ch.bits_per_unit;
    KpiReport r;
    double thr = 0.0, energy = 0.0, mec = 0.0, generated = 0.0, dropped = 0.0, delay = 0.0;
    int energy_vehicles = 0, satisfied = 0;
    for (const auto& v : paths.vehicles) {
        const std::size_t steps = v.rate.size();
        double d = 0.0, rate = 0.0, e = 0.0, m = 0.0;
        int e_steps = 0;
        for (std::size_t j = 0; j < steps; ++j) {
            d += std::min(v.queue[j] / std::max(v.rate[j], floor_units), cfg.delay_cap_s);
            rate += v.rate[j];
            if (v.rate[j] > 0) {
                e += v.power[j] / (v.rate[j] * ch.bits_per_unit);
                ++e_steps;
            }
            m += paths.price[j] * v.rate[j] * ch.bits_per_unit / ch.bandwidth_b;
        }
        const double delay_ms = 1e3 * d / steps;
        r.vehicle_delays_ms.push_back(delay_ms);
        delay += delay_ms;
        if (delay_ms < cfg.qos_threshold_ms) ++satisfied;
        thr += rate / steps * ch.bits_per_unit / 1e6;
        if (e_steps > 0) {
            energy += 1e9 * e / e_steps;
            ++energy_vehicles;
        }
        mec += m / steps;
        generated += v.generated;
        dropped += v.dropped;
    }
    const double n = static_cast<double>(paths.vehicles.size());
    r.mean_delay_ms = delay / n;
    r.throughput_mbps = thr / n;
    r.energy_per_bit_nj = energy_vehicles > 0 ? energy / energy_vehicles : 0.0;
    if (generated > 0) {
        r.packet_loss_pct = 100.0 * dropped / generated;
    } else {
        r.no_generated_data = true;
    }
    r.spectral_efficiency_bpshz = r.throughput_mbps * 1e6 / ch.bandwidth_b;
    r.mec_cost = mec / n;
    r.qos_satisfaction_pct = 100.0 * satisfied / n;
    return r;
}

const std::vector<std::string>& kpi_names() {
    static const std::vector<std::string> names = {"mean_delay_ms",  "throughput_mbps",
                                                   "energy_per_bit_nj", "packet_loss_pct",
                                                   "spectral_efficiency_bpshz", "mec_cost",
                                                   "qos_satisfaction_pct"};
    return names;
}

double kpi_value(const KpiReport& r, const std::string& name) {
    if (name == "mean_delay_ms") return r.mean_delay_ms;
    if (name == "throughput_mbps") return r.throughput_mbps;
    if (name == "energy_per_bit_nj") return r.energy_per_bit_nj;
    if (name == "packet_loss_pct") return r.packet_loss_pct;
    if (name == "spectral_efficiency_bpshz") return r.spectral_efficiency_bpshz;
    if (name == "mec_cost") return r.mec_cost;
    if (name == "qos_satisfaction_pct") return r.qos_satisfaction_pct;
    throw ConfigError("unknown KPI '" + name + "'");
}

KpiReport aggregate(const std::vector<KpiReport>& trials) {
    if (trials.empty()) throw PreconditionError("aggregate: no trials");
    KpiReport a;
    const double n = static_cast<double>(trials.size());
    for (const auto& t : trials) {
        a.mean_delay_ms += t.mean_delay_ms / n;
        a.throughput_mbps += t.throughput_mbps / n;
        a.energy_per_bit_nj += t.energy_per_bit_nj / n;
        a.packet_loss_pct += t.packet_loss_pct / n;
        a.spectral_efficiency_bpshz += t.spectral_efficiency_bpshz / n;
        a.mec_cost += t.mec_cost / n;
        a.qos_satisfaction_pct += t.qos_satisfaction_pct / n;
        a.no_generated_data = a.no_generated_data || t.no_generated_data;
        a.vehicle_delays_ms.insert(a.vehicle_delays_ms.end(), t.vehicle_delays_ms.begin(), t.vehicle_delays_ms.end());
        KpiReport flat = t;
        flat.vehicle_delays_ms.clear();
        flat.per_trial.clear();
        a.per_trial.push_back(std::move(flat));
    }
    return a;
}

KpiStats kpi_stats(const KpiReport& aggregated, const std::string& name) {
    KpiStats s;
    const auto& v = aggregated.per_trial;
    if (v.empty()) return {kpi_value(aggregated, name), 0.0};
    for (const auto& t : v) s.mean += kpi_value(t, name);
    s.mean /= v.size();
    if (v.size() > 1) {
        double ss = 0.0;
        for (const auto& t : v) ss += (kpi_value(t, name) - s.mean) * (kpi_value(t, name) - s.mean);
        s.stddev = std::sqrt(ss / (v.size() - 1));
    }
    return s;
}

KpiReport run_trials(const EquilibriumSolution& sol, const FleetConfig& fleet, const ChannelParams& ch,
                     const TrialConfig& cfg, const std::vector<Snapshot>& snapshots) {
    validate(cfg);
    std::vector<KpiReport> per(cfg.trials);
    for (int t = 0; t < cfg.trials; ++t)
        per[t] = compute_kpis(simulate_trial(sol, fleet, ch, cfg, snapshots, trial_seed(cfg.rng_seed, t)), ch, cfg);
    return aggregate(per);
}

Method parse_method(const std::string& s) {
    if (s == "proposed") return Method::Proposed;
    if (s == "gprox_k1") return Method::GproxK1;
    if (s == "smfg_k1") return Method::SmfgK1;
    if (s == "fixed_k2") return Method::FixedK2;
    if (s == "fixed_k3") return Method::FixedK3;
    throw ConfigError("unknown method '" + s + "'");
}

std::string to_string(Method m) {
    switch (m) {
        case Method::Proposed: return "proposed";
        case Method::GproxK1: return "gprox_k1";
        case Method::SmfgK1: return "smfg_k1";
        case Method::FixedK2: return "fixed_k2";
        case Method::FixedK3: return "fixed_k3";
    }
    return "?";
}

FleetConfig comparison_fleet(const ComparisonSetup& setup, int n) {
    FleetConfig f = make_reference_fleet(setup.grid, n, setup.native_types, setup.native_proportions);
    if (setup.heterogeneity_scale != 1.0) f = scale_heterogeneity(f, setup.heterogeneity_scale);
    return f;
}

EquilibriumSolution solve_method(Method m, const FleetConfig& fleet, const ComparisonSetup& setup) {
    switch (m) {
        case Method::Proposed: {
            const int k = select_type_count(fleet.n_vehicles, fleet.proportions, setup.error_model,
                                            setup.leo_selection)
                              .k_star;
            std::vector<int> grp(fleet.k_types);
            std::iota(grp.begin(), grp.end(), 0);
            FleetConfig merged = k < fleet.k_types ? merge_types(fleet, k, &grp) : fleet;
            SolverConfig c = setup.solver;
            c.step = StepMode::adaptive();
            EquilibriumSolution s = pdhg_solve(merged, setup.channel, c, setup.snapshots);
            s.type_map = grp;
            return s;
        }
        case Method::GproxK1:
            return baseline_solve(BaselineKind::GproxK1, fleet, setup.channel, setup.solver, setup.snapshots);
        case Method::SmfgK1:
            return baseline_solve(BaselineKind::SmfgK1, fleet, setup.channel, setup.solver, setup.snapshots);
        case Method::FixedK2:
            return baseline_solve(BaselineKind::FixedK2, fleet, setup.channel, setup.solver, setup.snapshots);
        case Method::FixedK3:
            return baseline_solve(BaselineKind::FixedK3, fleet, setup.channel, setup.solver, setup.snapshots);
    }
    throw ConfigError("unknown method");
}

std::vector<ComparisonCell> run_comparison(const std::vector<Method>& methods, const std::vector<int>& n_grid,
                                           const ComparisonSetup& setup, const TrialConfig& trial, int workers) {
    if (methods.empty()) throw ConfigError("comparison: at least one method is required");
    std::vector<ComparisonCell> cells;
    for (int n : n_grid)
        for (Method m : methods) {
            ComparisonCell c;
            c.method = m;
            c.n = n;
            cells.push_back(c);
        }
    parallel_for(static_cast<int>(cells.size()), workers, [&](int idx) {
        ComparisonCell& c = cells[idx];
        try {
            FleetConfig fleet = comparison_fleet(setup, c.n);
            EquilibriumSolution sol = solve_method(c.method, fleet, setup);
            c.k_types = sol.k_types();
            TrialConfig tc = trial;
            tc.n_vehicles = c.n;
            c.kpis = run_trials(sol, fleet, setup.channel, tc, setup.snapshots);
        } catch (const std::exception& e) {
            c.failed = true;
            c.error = e.what();
        }
    });
    return cells;
}

SignTest paired_sign_test(const std::vector<double>& a, const std::vector<double>& b, bool lower_is_better) {
    if (a.size() != b.size()) throw PreconditionError("sign test: samples must be paired");
    SignTest s;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) ++s.ties;
        else if ((a[i] < b[i]) == lower_is_better) ++s.wins;
        else ++s.losses;
    }
    const int n = s.wins + s.losses;
    // P(X >= wins) for X ~ Binomial(n, 1/2), summed in log space.
    double p = 0.0;
    for (int k = s.wins; k <= n; ++k)
        p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
    s.p_value = n == 0 ? 1.0 : std::min(1.0, p);
    return s;
}

void write_kpi_csv(std::ostream& os, const std::vector<ComparisonCell>& cells, int trials, std::uint64_t seed) {
    os << "method,n,kpi,mean,std,trials,seed\n";
    os.precision(10);
    for (const auto& c : cells) {
        if (c.failed) continue;
        for (const auto& name : kpi_names()) {
            KpiStats st = kpi_stats(c.kpis, name);
            os << to_string(c.method) << ',' << c.n << ',' << name << ',' << st.mean << ',' << st.stddev << ','
               << trials << ',' << seed << '\n';
        }
    }
}

void write_cdf_csv(std::ostream& os, const std::vector<ComparisonCell>& cells) {
    os << "method,n,vehicle_mean_delay_ms\n";
    os.precision(10);
    for (const auto& c : cells) {
        if (c.failed) continue;
        std::vector<double> d = c.kpis.vehicle_delays_ms;
        std::sort(d.begin(), d.end());
        for (double x : d) os << to_string(c.method) << ',' << c.n << ',' << x << '\n';
    }
}

DualPotential policy_value(const PowerField& power, const TypeParams& tp, const ChannelParams& ch,
                           const Coupling& coupling) {
    const Grid& g = power.grid;
    const double nu = 0.5 * tp.sigma * tp.sigma;
    DualPotential w(g);
    auto term = terminal_cost(g, tp.terminal_c);
    std::copy(term.begin(), term.end(), w.slice(g.n_t).begin());
    std::vector<double> lap(g.n_q);
    for (int j = g.n_t - 1; j >= 0; --j) {
        auto next = w.slice(j + 1);
        auto cur = w.slice(j);
        const LinkModel link = make_link(ch, tp, coupling.price[j], coupling.interference[j]);
        const double D = tp.data_rate(g.t(j));
        weighted_laplacian(next, g, lap);
        for (int i = 0; i < g.n_q; ++i) {
            const double wdq = g.weight(i) * g.dq;
            const bool hp = i + 1 < g.n_q, hm = i > 0;
            const double gp = hp ? (next[i + 1] - next[i]) / wdq : 0.0;
            const double gm = hm ? (next[i] - next[i - 1]) / wdq : 0.0;
            const double p = std::clamp(power(i, j), 0.0, link.p_max);
            const double cost = control_cost(link, D, D - link.rate(p), gp, gm, hp, hm);
            cur[i] = next[i] + g.dt * (nu * lap[i] + cost);
        }
    }
    return w;
}

double empirical_nash_gap(const EquilibriumSolution& sol, const FleetConfig& fleet, int n_probe,
                          [[maybe_unused]] const std::vector<Snapshot>& snapshots, std::uint64_t seed) {
    if (n_probe < 1) throw PreconditionError("nash gap: n_probe must be at least 1");
    if (!(sol.grid == fleet.grid)) throw PreconditionError("nash gap: solution and fleet grids differ");
    if (static_cast<int>(sol.type_map.size()) != fleet.k_types)
        throw PreconditionError("nash gap: solution type map does not cover the fleet's types");
    const Grid& g = fleet.grid;
    const ChannelParams& ch = sol.channel;
    std::map<int, std::pair<DualPotential, DualPotential>> cache;  // native type -> (policy value, best response)
    std::vector<double> cum(fleet.k_types);
    std::partial_sum(fleet.proportions.begin(), fleet.proportions.end(), cum.begin());

    double total = 0.0;
    for (int p = 0; p < n_probe; ++p) {
        auto rng = stream(seed, static_cast<std::uint64_t>(p));
        const double u = uniform01(rng);
        const int k = std::min(static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin()),
                               fleet.k_types - 1);
        const double q0 = sample_initial_queue(fleet, k, uniform01(rng));
        auto it = cache.find(k);
        if (it == cache.end()) {
            const TypeParams& tp = fleet.types[k];
            it = cache.emplace(k, std::make_pair(policy_value(sol.policies[sol.type_map[k]], tp, ch, sol.coupling),
                                                 hjb_sweep(tp, ch, sol.coupling, g)))
                     .first;
        }
        const double follow = interp_state(it->second.first.slice(0), g, q0);
        const double best = interp_state(it->second.second.slice(0), g, q0);
        total += std::max(follow - best, 0.0);
    }
    return total / n_probe;
}

}  // namespace hmfg
