#include "hmfg/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "hmfg/errors.hpp"
#include "hmfg/poisson.hpp"
#include "hmfg/stepsize.hpp"
#include "hmfg/transport.hpp"

namespace hmfg {

void validate(const SolverConfig& c) {
    if (c.max_iterations < 1) throw ConfigError("solver: max_iterations must be positive");
    if (!(c.tolerance > 0)) throw ConfigError("solver: tolerance must be positive");
    if (c.step.kind == StepMode::Kind::Fixed && !(c.step.product > 0 && c.step.product < 1))
        throw ConfigError("solver: fixed step product must lie in (0,1)");
    if (!(c.safety_margin > 0 && c.safety_margin < 1)) throw ConfigError("solver: safety margin outside (0,1)");
    if (!(c.lipschitz_l > 0)) throw ConfigError("solver: lipschitz_l must be positive");
    if (!(c.primal_dual_ratio > 0)) throw ConfigError("solver: primal_dual_ratio must be positive");
    if (!(c.momentum_step_scale > 0)) throw ConfigError("solver: momentum_step_scale must be positive");
    if (c.price.kappa < 0 || c.price.varrho < 0 || c.price.mu < 0)
        throw ConfigError("solver: price parameters must be nonnegative");
}

double value_scale(const FleetConfig& f) {
    double c = 0.0;
    for (const auto& t : f.types) c = std::max(c, t.terminal_c);
    double v = c * f.grid.q_max * f.grid.q_max;
    return v > 0 ? v : 1.0;
}

namespace {

const Snapshot* snapshot_for(const std::vector<Snapshot>& s, double t) {
    return s.empty() ? nullptr : &snapshot_at(s, t);
}

std::vector<double> cross_gains(const FleetConfig& f, const ChannelParams& ch) {
    return std::vector<double>(f.k_types, ch.cross_gain);
}

}  // namespace

Coupling idle_coupling(const Grid& g, const std::vector<Snapshot>& snapshots, const PriceParams& price) {
    Coupling c;
    c.interference.assign(g.slices(), 0.0);
    c.price.assign(g.slices(), price.kappa);
    for (int j = 0; j < g.slices(); ++j) {
        if (const Snapshot* s = snapshot_for(snapshots, g.t(j))) {
            c.interference[j] = s->i_sat;
            c.price[j] += phi_sat(*s, price.mu);
        }
    }
    return c;
}

Coupling compute_coupling(const FleetConfig& f, const std::vector<Density>& densities,
                          const std::vector<PowerField>& policies, const ChannelParams& ch,
                          const std::vector<Snapshot>& snapshots, const PriceParams& price) {
    const Grid& g = f.grid;
    const int K = f.k_types;
    if (static_cast<int>(densities.size()) != K || static_cast<int>(policies.size()) != K)
        throw PreconditionError("coupling: one density and policy per type required");
    std::vector<const Density*> dp;
    std::vector<const PowerField*> pp;
    for (int k = 0; k < K; ++k) {
        dp.push_back(&densities[k]);
        pp.push_back(&policies[k]);
    }
    const auto counts = f.class_counts();
    const auto gains = cross_gains(f, ch);
    Coupling c = idle_coupling(g, snapshots, price);
    const double gain = ch.representative_gain();
    const double c0 = ch.bandwidth_b / (ch.bits_per_unit * std::log(2.0));
    for (int j = 0; j < g.slices(); ++j) {
        c.interference[j] = mean_field_interference(dp, pp, counts, gains, j, c.interference[j]);
        if (price.varrho == 0.0) continue;
        double congestion = 0.0;
        for (int k = 0; k < K; ++k) {
            auto r = densities[k].slice(j);
            auto p = policies[k].slice(j);
            double s = 0.0;
            for (int i = 0; i < g.n_q; ++i)
                s += g.weight(i) * c0 * std::log1p(p[i] * gain / (ch.noise + c.interference[j])) * r[i];
            congestion += f.proportions[k] * s * g.dq;
        }
        c.price[j] += price.varrho * congestion;
    }
    return c;
}

double fpk_outflow_ratio(std::span<const double> drift, double sigma, const Grid& g) {
    const double nu = 0.5 * sigma * sigma;
    const int n = g.n_q;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        double out = 0.0;
        if (i + 1 < n) out += std::max(drift[i], 0.0) + nu / g.dq;
        if (i > 0) out += std::max(-drift[i], 0.0) + nu / g.dq;
        worst = std::max(worst, out * g.dt / (g.weight(i) * g.dq));
    }
    return worst;
}

std::vector<double> fpk_step(std::span<const double> rho, std::span<const double> drift, double sigma,
                             const Grid& g) {
    const int n = g.n_q;
    if (static_cast<int>(rho.size()) != n || static_cast<int>(drift.size()) != n)
        throw PreconditionError("fpk_step: slice length differs from grid");
    const double ratio = fpk_outflow_ratio(drift, sigma, g);
    if (ratio > 0.9)
        throw StabilityError("fpk_step: CFL ratio " + std::to_string(ratio) + " exceeds 0.9", ratio);
    const double nu = 0.5 * sigma * sigma;
    std::vector<double> flux(n - 1);
    for (int i = 0; i + 1 < n; ++i)
        flux[i] = rho[i] * std::max(drift[i], 0.0) + rho[i + 1] * std::min(drift[i + 1], 0.0) -
                  nu * (rho[i + 1] - rho[i]) / g.dq;
    std::vector<double> out(rho.begin(), rho.end());
    for (int i = 0; i < n; ++i) {
        double div = (i + 1 < n ? flux[i] : 0.0) - (i > 0 ? flux[i - 1] : 0.0);
        out[i] -= g.dt * div / (g.weight(i) * g.dq);
    }
    return out;
}

Density fpk_rollout(std::span<const double> rho0, const Field& drift, double sigma) {
    const Grid& g = drift.grid;
    Density d(g);
    std::copy(rho0.begin(), rho0.end(), d.slice(0).begin());
    for (int j = 0; j < g.n_t; ++j) {
        auto next = fpk_step(d.slice(j), drift.slice(j), sigma, g);
        std::copy(next.begin(), next.end(), d.slice(j + 1).begin());
    }
    return d;
}

void weighted_laplacian(std::span<const double> v, const Grid& g, std::span<double> out) {
    const int n = g.n_q;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        if (i > 0) s += v[i - 1] - v[i];
        if (i + 1 < n) s += v[i + 1] - v[i];
        out[i] = s / (g.weight(i) * g.dq * g.dq);
    }
}

HamiltonianSlice hamiltonian_slice(std::span<const double> v, const LinkModel& link, double data_rate,
                                   const Grid& g) {
    const int n = g.n_q;
    HamiltonianSlice h;
    h.value.resize(n);
    h.power.resize(n);
    h.drift.resize(n);
    for (int i = 0; i < n; ++i) {
        const double wdq = g.weight(i) * g.dq;
        const bool hp = i + 1 < n, hm = i > 0;
        const double gp = hp ? (v[i + 1] - v[i]) / wdq : 0.0;
        const double gm = hm ? (v[i] - v[i - 1]) / wdq : 0.0;
        HamiltonianPoint pt = upwind_hamiltonian(link, data_rate, gp, gm, hp, hm);
        h.value[i] = pt.value;
        h.power[i] = pt.power;
        h.drift[i] = pt.drift;
    }
    return h;
}

std::vector<double> terminal_cost(const Grid& g, double c) {
    std::vector<double> v(g.n_q);
    for (int i = 0; i < g.n_q; ++i) v[i] = c * g.q(i) * g.q(i);
    return v;
}

namespace {

struct TypeSweep {
    std::vector<HamiltonianSlice> slices;  // j = 0..n_t-1, evaluated on V_{j+1}
    Field residual;
};

LinkModel link_at(const ChannelParams& ch, const TypeParams& tp, const Coupling& c, int j) {
    return make_link(ch, tp, c.price[j], c.interference[j]);
}

// Sweeps the Hamiltonian of every slice and the residual field. When `fix_first`
// is set, V_0 is first rebuilt from V_1 so that the first residual row vanishes.
TypeSweep sweep_type(DualPotential& v, const TypeParams& tp, const ChannelParams& ch, const Coupling& c,
                     bool fix_first) {
    const Grid& g = v.grid;
    const double nu = 0.5 * tp.sigma * tp.sigma;
    TypeSweep s;
    s.slices.resize(g.n_t);
    s.residual = Field(g);
    std::vector<double> lap(g.n_q);
    for (int j = g.n_t - 1; j >= 0; --j) {
        auto next = v.slice(j + 1);
        s.slices[j] = hamiltonian_slice(next, link_at(ch, tp, c, j), tp.data_rate(g.t(j)), g);
        weighted_laplacian(next, g, lap);
        auto cur = v.slice(j);
        if (j == 0 && fix_first)
            for (int i = 0; i < g.n_q; ++i) cur[i] = next[i] + g.dt * (nu * lap[i] + s.slices[j].value[i]);
        auto r = s.residual.slice(j);
        for (int i = 0; i < g.n_q; ++i) r[i] = (cur[i] - next[i]) / g.dt - nu * lap[i] - s.slices[j].value[i];
    }
    return s;
}

double residual_norm(const Field& r, double v_ref) {
    const Grid& g = r.grid;
    const double scale = g.horizon_t / v_ref;
    const double dx = g.dq / g.q_max, ds = g.dt / g.horizon_t;
    double acc = 0.0;
    for (int j = 0; j < g.n_t; ++j) {
        auto s = r.slice(j);
        for (int i = 0; i < g.n_q; ++i) acc += g.weight(i) * (s[i] * scale) * (s[i] * scale);
    }
    return std::sqrt(acc * dx * ds);
}

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

Field hjb_residual_field(const DualPotential& v, const TypeParams& tp, const ChannelParams& ch,
                         const Coupling& coupling) {
    DualPotential copy = v;
    return sweep_type(copy, tp, ch, coupling, false).residual;
}

double hjb_residual(const DualPotential& v, const TypeParams& tp, const ChannelParams& ch, const Coupling& coupling,
                    double v_ref) {
    return residual_norm(hjb_residual_field(v, tp, ch, coupling), v_ref);
}

DualPotential hjb_sweep(const TypeParams& tp, const ChannelParams& ch, const Coupling& coupling, const Grid& g) {
    DualPotential v(g);
    auto term = terminal_cost(g, tp.terminal_c);
    std::copy(term.begin(), term.end(), v.slice(g.n_t).begin());
    const double nu = 0.5 * tp.sigma * tp.sigma;
    std::vector<double> lap(g.n_q);
    for (int j = g.n_t - 1; j >= 0; --j) {
        auto next = v.slice(j + 1);
        auto h = hamiltonian_slice(next, link_at(ch, tp, coupling, j), tp.data_rate(g.t(j)), g);
        weighted_laplacian(next, g, lap);
        auto cur = v.slice(j);
        for (int i = 0; i < g.n_q; ++i) cur[i] = next[i] + g.dt * (nu * lap[i] + h.value[i]);
    }
    return v;
}

std::vector<double> continuity_residual(const Density& rho, const Field& m_plus, const Field& m_minus,
                                        double sigma) {
    const Grid& g = rho.grid;
    const int n = g.n_q;
    const double nu = 0.5 * sigma * sigma;
    std::vector<double> out(static_cast<std::size_t>(g.n_t - 1) * n);
    std::vector<double> flux(n - 1);
    for (int j = 0; j + 1 < g.n_t; ++j) {
        auto r0 = rho.slice(j), r1 = rho.slice(j + 1);
        auto mp = m_plus.slice(j), mm = m_minus.slice(j);
        for (int i = 0; i + 1 < n; ++i) flux[i] = mp[i] + mm[i + 1] - nu * (r0[i + 1] - r0[i]) / g.dq;
        for (int i = 0; i < n; ++i) {
            double div = (i + 1 < n ? flux[i] : 0.0) - (i > 0 ? flux[i - 1] : 0.0);
            out[static_cast<std::size_t>(j) * n + i] = (r1[i] - r0[i]) / g.dt + div / (g.weight(i) * g.dq);
        }
    }
    return out;
}

SpaceTimePoisson make_dual_poisson(const Grid& g) {
    if (g.n_t < 2) throw ConfigError("solver: at least two time steps are required");
    return SpaceTimePoisson(g.n_q, 1.0 / (g.n_q - 1), g.n_t - 1, 1.0 / g.n_t, TimeBoundary::NeumannDirichlet);
}

void dual_update(DualPotential& v, const Density& rho_bar, const Field& m_plus_bar, const Field& m_minus_bar,
                 double sigma, double varsigma, double v_ref, const SpaceTimePoisson& poisson) {
    if (varsigma == 0.0) return;
    const Grid& g = v.grid;
    auto c = continuity_residual(rho_bar, m_plus_bar, m_minus_bar, sigma);
    const double scale = -g.q_max * g.horizon_t;
    for (double& x : c) x *= scale;
    auto u = poisson.solve(c);
    const std::size_t n = g.n_q;
    for (int j = 0; j + 1 < g.n_t; ++j) {
        auto s = v.slice(j + 1);
        for (std::size_t i = 0; i < n; ++i) s[i] += varsigma * v_ref * u[j * n + i];
    }
}

double max_drift(const FleetConfig& f, const ChannelParams& ch) {
    double d = 0.0;
    for (const auto& t : f.types) d = std::max(d, t.data_rate.max());
    return d + ch.peak_rate_units();
}

EquilibriumSolution pdhg_solve(const FleetConfig& fleet, const ChannelParams& ch, const SolverConfig& cfg,
                               const std::vector<Snapshot>& snapshots) {
    validate(fleet);
    validate(ch);
    validate(cfg);
    const Grid& g = fleet.grid;
    const int K = fleet.k_types;
    const SpaceTimePoisson poisson = make_dual_poisson(g);
    if (!cfg.price_override.empty() && static_cast<int>(cfg.price_override.size()) != g.slices())
        throw ConfigError("solver: price override needs one value per time slice");

    const double v_ref = value_scale(fleet);
    const double primal_scale = g.horizon_t / (v_ref * g.q_max);
    const double grad_scale = g.q_max / v_ref;
    const double dsat = snapshots.size() > 1 ? max_delta_sat(snapshots, cfg.price.mu) * grad_scale : 0.0;

    EquilibriumSolution sol;
    sol.grid = g;
    sol.channel = ch;
    sol.types = fleet.types;
    sol.proportions = fleet.proportions;
    sol.class_counts = fleet.class_counts();
    sol.type_map.resize(K);
    for (int k = 0; k < K; ++k) sol.type_map[k] = k;

    std::vector<Density>& rho = sol.densities;
    std::vector<DualPotential>& v = sol.potentials;
    std::vector<Field>& drift = sol.drifts;
    std::vector<Field> m_plus(K, Field(g)), m_minus(K, Field(g));
    sol.policies.assign(K, PowerField(g));
    auto split_momentum = [&](int k) {
        for (std::size_t x = 0; x < rho[k].values.size(); ++x) {
            m_plus[k].values[x] = rho[k].values[x] * std::max(drift[k].values[x], 0.0);
            m_minus[k].values[x] = rho[k].values[x] * std::min(drift[k].values[x], 0.0);
        }
    };
    auto refresh_coupling = [&] {
        if (!cfg.price_override.empty()) {
            Coupling c = compute_coupling(fleet, rho, sol.policies, ch, snapshots, PriceParams{0, 0, 0});
            c.price = cfg.price_override;
            return c;
        }
        return compute_coupling(fleet, rho, sol.policies, ch, snapshots, cfg.price);
    };

    // Warm start: best response to the uncoupled market and its density flow.
    Coupling coupling = idle_coupling(g, snapshots, cfg.price);
    if (!cfg.price_override.empty()) coupling.price = cfg.price_override;
    for (int k = 0; k < K; ++k) {
        const auto& tp = fleet.types[k];
        v.push_back(hjb_sweep(tp, ch, coupling, g));
        TypeSweep sw = sweep_type(v[k], tp, ch, coupling, false);
        drift.emplace_back(g);
        for (int j = 0; j < g.n_t; ++j) {
            std::copy(sw.slices[j].drift.begin(), sw.slices[j].drift.end(), drift[k].slice(j).begin());
            std::copy(sw.slices[j].power.begin(), sw.slices[j].power.end(), sol.policies[k].slice(j).begin());
        }
        std::copy(drift[k].slice(g.n_t - 1).begin(), drift[k].slice(g.n_t - 1).end(), drift[k].slice(g.n_t).begin());
        std::copy(sol.policies[k].slice(g.n_t - 1).begin(), sol.policies[k].slice(g.n_t - 1).end(),
                  sol.policies[k].slice(g.n_t).begin());
        rho.push_back(fpk_rollout(fleet.rho0[k], drift[k], tp.sigma));
        for (int j = 0; j < g.slices(); ++j) normalize_slice(rho[k].slice(j), g.dq);
        split_momentum(k);
    }
    coupling = refresh_coupling();

    std::vector<TypeSweep> sweeps(K);
    std::vector<double> lap(g.n_q), mass_shift(g.slices(), 0.0);
    StepSizes step;
    double phi_running = 0.0;  // running max of the dual gradient over iterations
    auto tick = std::chrono::steady_clock::now();
    for (int it = 0;; ++it) {
        double residual = 0.0;
        for (int k = 0; k < K; ++k) {
            sweeps[k] = sweep_type(v[k], fleet.types[k], ch, coupling, true);
            residual = std::max(residual, residual_norm(sweeps[k].residual, v_ref));
        }
        double mass_err = 0.0;
        for (const auto& d : rho) mass_err = std::max(mass_err, max_mass_error(d));
        const auto now = std::chrono::steady_clock::now();
        sol.history.push_back(
            {it, residual, step.product, step.h_k, mass_err, 0.0, std::chrono::duration<double>(now - tick).count(),
             step.c_h, step.delta_sat, step.xi});
        tick = now;
        sol.iterations = it;

        bool bad = !std::isfinite(residual) || residual > cfg.divergence_bound;
        for (int k = 0; k < K && !bad; ++k) bad = !all_finite(v[k].values) || !all_finite(rho[k].values);
        if (bad) {
            sol.diverged = true;
            sol.note = "diverged at iteration " + std::to_string(it);
            if (cfg.throw_on_divergence)
                throw DivergenceError("pdhg: non-finite or exploding residual at iteration " + std::to_string(it), it,
                                      step.product);
            break;
        }
        if (residual < cfg.tolerance) {
            sol.converged = true;
            if (cfg.stop_on_tolerance) break;
        }
        if (it >= cfg.max_iterations) break;

        if (cfg.step.kind == StepMode::Kind::Fixed) {
            step = fixed_step(cfg.step.product);
        } else {
            std::vector<const Density*> dp;
            for (int k = 0; k < K; ++k) {
                dp.push_back(&rho[k]);
                phi_running = std::max(phi_running, dual_gradient_sup(v[k]) * grad_scale);
            }
            const double h = K > 1 ? heterogeneity_measure_time_avg(dp) / g.q_max : 0.0;
            step = adapt_step_from(K, h, phi_running, cfg.lipschitz_l, 1.0, cfg.safety_margin, dsat);
        }
        const double product = step.product;
        const double xi = std::sqrt(product) * cfg.primal_dual_ratio;
        const double varsigma = std::sqrt(product) / cfg.primal_dual_ratio;

        for (int k = 0; k < K; ++k) {
            const auto& tp = fleet.types[k];
            const double nu = 0.5 * tp.sigma * tp.sigma;
            Density rho_old = rho[k];
            Field mp_old = m_plus[k], mm_old = m_minus[k];
            Density& r = rho[k];
            Field& dr = drift[k];

            // Primal descent on rho with the current controls held fixed.
            for (int j = 1; j < g.n_t; ++j) {
                auto next = v[k].slice(j + 1), cur = v[k].slice(j);
                const LinkModel link = link_at(ch, tp, coupling, j);
                const double D = tp.data_rate(g.t(j));
                weighted_laplacian(next, g, lap);
                auto s = r.slice(j);
                for (int i = 0; i < g.n_q; ++i) {
                    const double wdq = g.weight(i) * g.dq;
                    const bool hp = i + 1 < g.n_q, hm = i > 0;
                    const double gp = hp ? (next[i + 1] - next[i]) / wdq : 0.0;
                    const double gm = hm ? (next[i] - next[i - 1]) / wdq : 0.0;
                    const double cost = control_cost(link, D, dr(i, j), gp, gm, hp, hm);
                    const double res = (cur[i] - next[i]) / g.dt - nu * lap[i] - cost;
                    s[i] += xi * primal_scale * res;
                }
                mass_shift[j] = project_to_simplex(s, g.dq) / (xi * primal_scale);
            }
            // The mass multiplier of each slice is a constant offset of the potential.
            double offset = 0.0;
            for (int j = g.n_t - 1; j >= 1; --j) {
                offset -= g.dt * mass_shift[j];
                for (double& x : v[k].slice(j)) x += offset;
            }

            // Proximal step on the momentum m = rho * drift.
            for (int j = 0; j < g.n_t; ++j) {
                auto next = v[k].slice(j + 1);
                const LinkModel link = link_at(ch, tp, coupling, j);
                const double D = tp.data_rate(g.t(j));
                auto s = r.slice(j);
                for (int i = 0; i < g.n_q; ++i) {
                    const double wdq = g.weight(i) * g.dq;
                    const bool hp = i + 1 < g.n_q, hm = i > 0;
                    const double gp = hp ? (next[i + 1] - next[i]) / wdq : 0.0;
                    const double gm = hm ? (next[i] - next[i - 1]) / wdq : 0.0;
                    const double m_old = mp_old(i, j) + mm_old(i, j);
                    HamiltonianPoint pt;
                    if (s[i] > 0) {
                        const double lambda = v_ref * s[i] * g.horizon_t / (cfg.momentum_step_scale * xi * g.q_max);
                        pt = proximal_control(link, D, gp, gm, hp, hm, lambda, m_old / s[i]);
                    } else {
                        pt = upwind_hamiltonian(link, D, gp, gm, hp, hm);
                    }
                    dr(i, j) = pt.drift;
                    sol.policies[k](i, j) = pt.power;
                }
            }
            std::copy(dr.slice(g.n_t - 1).begin(), dr.slice(g.n_t - 1).end(), dr.slice(g.n_t).begin());
            std::copy(sol.policies[k].slice(g.n_t - 1).begin(), sol.policies[k].slice(g.n_t - 1).end(),
                      sol.policies[k].slice(g.n_t).begin());

            auto last = fpk_step(r.slice(g.n_t - 1), dr.slice(g.n_t - 1), tp.sigma, g);
            std::copy(last.begin(), last.end(), r.slice(g.n_t).begin());
            normalize_slice(r.slice(g.n_t), g.dq);
            split_momentum(k);

            Density rho_bar = r;
            Field mp_bar = m_plus[k], mm_bar = m_minus[k];
            for (std::size_t x = 0; x < rho_bar.values.size(); ++x) {
                rho_bar.values[x] = 2.0 * r.values[x] - rho_old.values[x];
                mp_bar.values[x] = 2.0 * m_plus[k].values[x] - mp_old.values[x];
                mm_bar.values[x] = 2.0 * m_minus[k].values[x] - mm_old.values[x];
            }
            dual_update(v[k], rho_bar, mp_bar, mm_bar, tp.sigma, varsigma, v_ref, poisson);
        }
        coupling = refresh_coupling();
    }

    // Report the best-response controls of the final potentials.
    for (int k = 0; k < K; ++k) {
        auto& pol = sol.policies[k];
        auto& dr = drift[k];
        for (int j = 0; j < g.n_t; ++j) {
            std::copy(sweeps[k].slices[j].power.begin(), sweeps[k].slices[j].power.end(), pol.slice(j).begin());
            std::copy(sweeps[k].slices[j].drift.begin(), sweeps[k].slices[j].drift.end(), dr.slice(j).begin());
        }
        std::copy(pol.slice(g.n_t - 1).begin(), pol.slice(g.n_t - 1).end(), pol.slice(g.n_t).begin());
        std::copy(dr.slice(g.n_t - 1).begin(), dr.slice(g.n_t - 1).end(), dr.slice(g.n_t).begin());
    }
    sol.coupling = coupling;
    return sol;
}

namespace {

// (I - dt nu L_w) x = b by the Thomas algorithm.
void implicit_diffusion(std::span<const double> b, double nu, const Grid& g, std::span<double> x) {
    const int n = g.n_q;
    std::vector<double> lo(n, 0.0), di(n, 1.0), up(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double a = g.dt * nu / (g.weight(i) * g.dq * g.dq);
        if (i > 0) {
            lo[i] = -a;
            di[i] += a;
        }
        if (i + 1 < n) {
            up[i] = -a;
            di[i] += a;
        }
    }
    std::vector<double> c(n), d(n);
    c[0] = up[0] / di[0];
    d[0] = b[0] / di[0];
    for (int i = 1; i < n; ++i) {
        double den = di[i] - lo[i] * c[i - 1];
        c[i] = up[i] / den;
        d[i] = (b[i] - lo[i] * d[i - 1]) / den;
    }
    x[n - 1] = d[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
}

}  // namespace

EquilibriumSolution picard_solve(const FleetConfig& fleet, const ChannelParams& ch, const SolverConfig& cfg,
                                 const std::vector<Snapshot>& snapshots, const PicardOptions& opt) {
    validate(fleet);
    validate(ch);
    validate(cfg);
    if (!(opt.damping > 0 && opt.damping <= 1)) throw ConfigError("picard: damping must lie in (0,1]");
    const Grid& g = fleet.grid;
    const int K = fleet.k_types;
    const double v_ref = value_scale(fleet);

    EquilibriumSolution sol;
    sol.grid = g;
    sol.channel = ch;
    sol.types = fleet.types;
    sol.proportions = fleet.proportions;
    sol.class_counts = fleet.class_counts();
    sol.type_map.resize(K);
    for (int k = 0; k < K; ++k) sol.type_map[k] = k;
    sol.policies.assign(K, PowerField(g));
    sol.drifts.assign(K, Field(g));
    sol.potentials.assign(K, DualPotential(g));
    for (int k = 0; k < K; ++k) {
        Field drift(g);
        for (int j = 0; j < g.slices(); ++j)
            for (int i = 0; i < g.n_q; ++i) drift(i, j) = fleet.types[k].data_rate(g.t(j));
        sol.densities.push_back(fpk_rollout(fleet.rho0[k], drift, fleet.types[k].sigma));
        sol.drifts[k] = drift;
    }

    std::vector<double> changes;
    std::vector<double> lap(g.n_q), rhs(g.n_q);
    for (int it = 1; it <= opt.max_iterations; ++it) {
        Coupling coupling = compute_coupling(fleet, sol.densities, sol.policies, ch, snapshots, cfg.price);
        if (!cfg.price_override.empty()) coupling.price = cfg.price_override;
        double change = 0.0;
        for (int k = 0; k < K; ++k) {
            const auto& tp = fleet.types[k];
            const double nu = 0.5 * tp.sigma * tp.sigma;
            auto& v = sol.potentials[k];
            auto term = terminal_cost(g, tp.terminal_c);
            std::copy(term.begin(), term.end(), v.slice(g.n_t).begin());
            for (int j = g.n_t - 1; j >= 0; --j) {
                auto next = v.slice(j + 1);
                auto h = hamiltonian_slice(next, link_at(ch, tp, coupling, j), tp.data_rate(g.t(j)), g);
                if (opt.implicit_diffusion) {
                    for (int i = 0; i < g.n_q; ++i) rhs[i] = next[i] + g.dt * h.value[i];
                    implicit_diffusion(rhs, nu, g, v.slice(j));
                } else {
                    weighted_laplacian(next, g, lap);
                    auto cur = v.slice(j);
                    for (int i = 0; i < g.n_q; ++i) cur[i] = next[i] + g.dt * (nu * lap[i] + h.value[i]);
                }
                std::copy(h.power.begin(), h.power.end(), sol.policies[k].slice(j).begin());
                std::copy(h.drift.begin(), h.drift.end(), sol.drifts[k].slice(j).begin());
            }
            std::copy(sol.policies[k].slice(g.n_t - 1).begin(), sol.policies[k].slice(g.n_t - 1).end(),
                      sol.policies[k].slice(g.n_t).begin());
            std::copy(sol.drifts[k].slice(g.n_t - 1).begin(), sol.drifts[k].slice(g.n_t - 1).end(),
                      sol.drifts[k].slice(g.n_t).begin());

            Density fresh = fpk_rollout(fleet.rho0[k], sol.drifts[k], tp.sigma);
            Density& d = sol.densities[k];
            Density old = d;
            for (std::size_t x = 0; x < d.values.size(); ++x)
                d.values[x] = (1.0 - opt.damping) * d.values[x] + opt.damping * fresh.values[x];
            for (int j = 0; j < g.slices(); ++j) {
                normalize_slice(d.slice(j), g.dq);
                change = std::max(change, w2_1d(GridSlice{old.slice(j), g.dq}, GridSlice{d.slice(j), g.dq}));
            }
        }
        changes.push_back(change);
        sol.iterations = it;
        sol.coupling = coupling;
        double residual = 0.0;
        for (int k = 0; k < K; ++k)
            residual = std::max(residual, hjb_residual(sol.potentials[k], fleet.types[k], ch, coupling, v_ref));
        sol.history.push_back({it, residual, opt.damping, 0.0, 0.0, change});
        if (!std::isfinite(change)) {
            sol.diverged = true;
            sol.note = "non-finite density change";
            break;
        }
        if (change < opt.tolerance) {
            sol.converged = true;
            break;
        }
        if (it > 50 && change >= changes[it - 51]) {
            sol.note = "density change did not decrease over 50 iterations";
            break;
        }
    }
    if (!sol.converged && sol.note.empty()) sol.note = "iteration limit reached";
    return sol;
}

BaselineKind parse_baseline(const std::string& s) {
    if (s == "gprox_k1") return BaselineKind::GproxK1;
    if (s == "smfg_k1") return BaselineKind::SmfgK1;
    if (s == "fixed_k2") return BaselineKind::FixedK2;
    if (s == "fixed_k3") return BaselineKind::FixedK3;
    throw ConfigError("unknown baseline '" + s + "'");
}

std::string to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::GproxK1: return "gprox_k1";
        case BaselineKind::SmfgK1: return "smfg_k1";
        case BaselineKind::FixedK2: return "fixed_k2";
        case BaselineKind::FixedK3: return "fixed_k3";
    }
    return "?";
}

EquilibriumSolution baseline_solve(BaselineKind kind, const FleetConfig& fleet, const ChannelParams& ch,
                                   const SolverConfig& cfg, const std::vector<Snapshot>& snapshots) {
    int target = 1;
    if (kind == BaselineKind::FixedK2) target = 2;
    if (kind == BaselineKind::FixedK3) target = 3;
    target = std::min(target, fleet.k_types);
    std::vector<int> grp(fleet.k_types);
    FleetConfig merged;
    if (target == fleet.k_types) {
        merged = fleet;
        for (int k = 0; k < fleet.k_types; ++k) grp[k] = k;
    } else {
        merged = merge_types(fleet, target, &grp);
    }

    SolverConfig c = cfg;
    if (kind == BaselineKind::GproxK1 || kind == BaselineKind::SmfgK1) c.step = StepMode::fixed(0.99);
    else c.step = StepMode::adaptive();

    EquilibriumSolution sol;
    if (kind == BaselineKind::SmfgK1) {
        // Leader sets an exogenous price, followers solve, the leader moves halfway
        // towards the realised congestion price.
        Coupling idle = idle_coupling(merged.grid, snapshots, cfg.price);
        c.price_override = idle.price;
        for (int round = 0; round < 10; ++round) {
            sol = pdhg_solve(merged, ch, c, snapshots);
            Coupling realised = compute_coupling(merged, sol.densities, sol.policies, ch, snapshots, cfg.price);
            for (std::size_t j = 0; j < c.price_override.size(); ++j)
                c.price_override[j] = 0.5 * c.price_override[j] + 0.5 * realised.price[j];
        }
    } else {
        sol = pdhg_solve(merged, ch, c, snapshots);
    }
    sol.type_map = grp;
    return sol;
}

SpreadBoundCheck check_type_spread_bound(const EquilibriumSolution& s, double l_b) {
    SpreadBoundCheck out;
    const Grid& g = s.grid;
    const int K = s.k_types();
    const double growth = std::exp(l_b * g.horizon_t);
    for (int a = 0; a < K; ++a)
        for (int b = a + 1; b < K; ++b) {
            const double w0 = w2_1d(GridSlice{s.densities[a].slice(0), g.dq}, GridSlice{s.densities[b].slice(0), g.dq});
            const double bound = growth * (w0 + std::abs(s.types[a].theta - s.types[b].theta) * l_b * g.horizon_t);
            for (int j = 0; j < g.slices(); ++j) {
                double w = w2_1d(GridSlice{s.densities[a].slice(j), g.dq}, GridSlice{s.densities[b].slice(j), g.dq});
                double ratio = bound > 0 ? w / bound : (w > 0 ? INFINITY : 0.0);
                out.worst_ratio = std::max(out.worst_ratio, ratio);
                if (w > bound + 1e-12) out.holds = false;
            }
        }
    return out;
}

void write_solution_csv(std::ostream& os, const EquilibriumSolution& s) {
    os << "type,time_index,state_index,rho,phi,power\n";
    os.precision(12);
    const Grid& g = s.grid;
    for (int k = 0; k < s.k_types(); ++k)
        for (int j = 0; j < g.slices(); ++j)
            for (int i = 0; i < g.n_q; ++i)
                os << k << ',' << j << ',' << i << ',' << s.densities[k](i, j) << ',' << s.potentials[k](i, j) << ','
                   << s.policies[k](i, j) << '\n';
}

void write_residual_csv(std::ostream& os, const EquilibriumSolution& s) {
    os << "iteration,residual,step_product,h_k,c_h,delta_sat,xi\n";
    os.precision(12);
    for (const auto& r : s.history)
        os << r.iteration << ',' << r.residual << ',' << r.step_product << ',' << r.h_k << ',' << r.c_h << ','
           << r.delta_sat << ',' << r.xi << '\n';
}

}  // namespace hmfg
