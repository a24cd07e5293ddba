#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hmfg/errors.hpp"
#include "hmfg/fleet_sim.hpp"

using namespace hmfg;

namespace {

std::vector<Snapshot> horizon_snapshots() {
    LeoConfig lc;
    return generate_snapshots(lc, 0.06, 1).windows;
}

// A solution that holds every type at a constant transmit power.
EquilibriumSolution constant_policy(const FleetConfig& f, const ChannelParams& ch, double p) {
    EquilibriumSolution s;
    s.grid = f.grid;
    s.channel = ch;
    s.types = f.types;
    s.proportions = f.proportions;
    for (int k = 0; k < f.k_types; ++k) {
        s.policies.emplace_back(f.grid, p);
        s.type_map.push_back(k);
    }
    s.coupling = idle_coupling(f.grid, horizon_snapshots(), PriceParams{});
    return s;
}

FleetConfig quiet_fleet(const Grid& g, double data_rate, double sigma) {
    FleetConfig f = make_reference_fleet(g, 100, 1);
    f.types[0].data_rate = DataRate{data_rate, 0.0, 1.0};
    f.types[0].sigma = sigma;
    return f;
}

VehiclePath flat_path(int steps, double queue, double rate, double power) {
    VehiclePath v;
    v.queue.assign(steps, queue);
    v.rate.assign(steps, rate);
    v.power.assign(steps, power);
    v.generated = queue;
    return v;
}

}  // namespace

TEST(Simulate, NoiselessArrivalsIntegrateExactly) {
    Grid g = make_grid(50, 60, 10.0, 0.06);
    ChannelParams ch;
    FleetConfig f = quiet_fleet(g, 20.0, 0.0);
    TrialConfig tc;
    tc.n_vehicles = 50;
    auto paths = simulate_trial(constant_policy(f, ch, 0.0), f, ch, tc, horizon_snapshots(), 4);
    for (const auto& v : paths.vehicles) {
        for (int j = 0; j < g.n_t; ++j) EXPECT_NEAR(v.queue[j] - v.queue[0], 20.0 * j * g.dt, 1e-12);
        EXPECT_NEAR(v.final_queue - v.queue[0], 20.0 * g.horizon_t, 1e-12);
        EXPECT_EQ(v.transmitted, 0.0);
    }
}

TEST(Simulate, IdleQueuesStayPut) {
    Grid g = make_grid(50, 60, 10.0, 0.06);
    ChannelParams ch;
    FleetConfig f = quiet_fleet(g, 0.0, 0.0);
    TrialConfig tc;
    tc.n_vehicles = 20;
    auto paths = simulate_trial(constant_policy(f, ch, 0.0), f, ch, tc, {}, 9);
    for (const auto& v : paths.vehicles) {
        for (double q : v.queue) EXPECT_EQ(q, v.queue[0]);
        EXPECT_EQ(v.final_queue, v.queue[0]);
    }
}

TEST(Simulate, BrownianIncrementVariance) {
    Grid g = make_grid(50, 60, 10.0, 0.06);
    ChannelParams ch;
    FleetConfig f = quiet_fleet(g, 0.0, 2.0);
    TrialConfig tc;
    tc.n_vehicles = 10000;
    auto paths = simulate_trial(constant_policy(f, ch, 0.0), f, ch, tc, {}, 21);
    std::vector<double> inc;
    for (const auto& v : paths.vehicles) inc.push_back(v.final_queue - v.queue[0]);
    const double n = static_cast<double>(inc.size());
    const double mean = std::accumulate(inc.begin(), inc.end(), 0.0) / n;
    double var = 0;
    for (double x : inc) var += (x - mean) * (x - mean);
    var /= n - 1;
    const double expected = 4.0 * g.horizon_t;
    EXPECT_NEAR(var, expected, 3 * expected * std::sqrt(2.0 / (n - 1)));
    EXPECT_NEAR(mean, 0.0, 3 * std::sqrt(expected / n));
}

TEST(Simulate, ConservationAndBoundsOnEquilibriumPolicies) {
    Grid g = make_grid(50, 60, 10.0, 0.06);
    ChannelParams ch;
    FleetConfig f = make_reference_fleet(g, 500, 3);
    auto sol = pdhg_solve(f, ch, SolverConfig{}, horizon_snapshots());
    sol.type_map = {0, 1, 2};
    TrialConfig tc;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto paths = simulate_trial(sol, f, ch, tc, horizon_snapshots(), seed);
        ASSERT_EQ(paths.vehicles.size(), 500u);
        for (const auto& v : paths.vehicles) {
            const double balance = v.generated - v.transmitted - v.dropped - v.final_queue;
            EXPECT_LE(std::abs(balance), 1e-6 * std::max(1.0, v.generated));
            EXPECT_GE(v.transmitted, 0.0);
            EXPECT_GE(v.dropped, 0.0);
            for (int j = 0; j < g.n_t; ++j) {
                EXPECT_GE(v.queue[j], 0.0);
                EXPECT_LE(v.queue[j], g.q_max);
                EXPECT_GE(v.power[j], 0.0);
                EXPECT_LE(v.power[j], ch.p_max);
            }
            EXPECT_GE(v.final_queue, 0.0);
            EXPECT_LE(v.final_queue, g.q_max);
        }
    }
}

TEST(Simulate, SameSeedIsPairedAcrossSolutions) {
    Grid g = make_grid(50, 60, 10.0, 0.06);
    ChannelParams ch;
    FleetConfig f = make_reference_fleet(g, 100, 2);
    TrialConfig tc;
    tc.n_vehicles = 100;
    auto a = simulate_trial(constant_policy(f, ch, 0.05), f, ch, tc, horizon_snapshots(), 77);
    auto b = simulate_trial(constant_policy(f, ch, 0.15), f, ch, tc, horizon_snapshots(), 77);
    auto c = simulate_trial(constant_policy(f, ch, 0.05), f, ch, tc, horizon_snapshots(), 77);
    for (std::size_t i = 0; i < a.vehicles.size(); ++i) {
        EXPECT_EQ(a.vehicles[i].gain, b.vehicles[i].gain);
        EXPECT_EQ(a.vehicles[i].queue[0], b.vehicles[i].queue[0]);
        EXPECT_EQ(a.vehicles[i].queue, c.vehicles[i].queue);
        EXPECT_EQ(a.vehicles[i].rate, c.vehicles[i].rate);
    }
    EXPECT_NE(trial_seed(1, 0), trial_seed(1, 1));
    EXPECT_EQ(trial_seed(5, 3), trial_seed(5, 3));
}

TEST(Simulate, SnrOverrideFixesTheGain) {
    Grid g = make_grid(50, 60, 10.0, 0.06);
    ChannelParams ch;
    FleetConfig f = make_reference_fleet(g, 10, 1);
    TrialConfig tc;
    tc.n_vehicles = 10;
    tc.snr_db = 20.0;
    auto paths = simulate_trial(constant_policy(f, ch, 0.0), f, ch, tc, {}, 2);
    for (const auto& v : paths.vehicles) EXPECT_NEAR(ch.p_max * v.gain / ch.noise, 100.0, 1e-9);
}

TEST(Simulate, RejectsMismatchedInputs) {
    Grid g = make_grid(50, 60, 10.0, 0.06);
    ChannelParams ch;
    FleetConfig f = make_reference_fleet(g, 10, 2);
    EquilibriumSolution s = constant_policy(f, ch, 0.0);
    s.type_map = {0};
    EXPECT_THROW(simulate_trial(s, f, ch, TrialConfig{}, {}, 1), PreconditionError);
    TrialConfig bad;
    bad.trials = 0;
    EXPECT_THROW(validate(bad), ConfigError);
}

TEST(Kpis, SilentLinksHitTheDelayCap) {
    ChannelParams ch;
    TrialConfig tc;
    TrialPaths p;
    p.dt = 0.001;
    p.q_max = 10;
    p.price.assign(60, 1.0);
    for (int i = 0; i < 4; ++i) p.vehicles.push_back(flat_path(60, 3.0, 0.0, 0.0));
    KpiReport r = compute_kpis(p, ch, tc);
    EXPECT_DOUBLE_EQ(r.mean_delay_ms, 1e3 * tc.delay_cap_s);
    EXPECT_EQ(r.throughput_mbps, 0.0);
    EXPECT_EQ(r.energy_per_bit_nj, 0.0);
    EXPECT_EQ(r.qos_satisfaction_pct, 0.0);
    EXPECT_EQ(r.mec_cost, 0.0);
}

TEST(Kpis, ConstantQueueAndRate) {
    ChannelParams ch;
    TrialConfig tc;
    TrialPaths p;
    p.dt = 0.001;
    p.q_max = 10;
    p.price.assign(60, 2.0);
    // Queue 2 units served at 40 units/s: 50 ms delay, 40 Mbit/s.
    for (int i = 0; i < 3; ++i) p.vehicles.push_back(flat_path(60, 2.0, 40.0, 0.1));
    p.vehicles.push_back(flat_path(60, 8.0, 40.0, 0.1));
    KpiReport r = compute_kpis(p, ch, tc);
    EXPECT_NEAR(r.mean_delay_ms, (3 * 50.0 + 200.0) / 4, 1e-9);
    EXPECT_NEAR(r.throughput_mbps, 40.0, 1e-9);
    EXPECT_NEAR(r.spectral_efficiency_bpshz, 40e6 / ch.bandwidth_b, 1e-12);
    EXPECT_NEAR(r.energy_per_bit_nj, 1e9 * 0.1 / 40e6, 1e-9);
    EXPECT_NEAR(r.qos_satisfaction_pct, 75.0, 1e-12);
    EXPECT_NEAR(r.mec_cost, 2.0 * 40e6 / ch.bandwidth_b, 1e-12);
    EXPECT_EQ(r.packet_loss_pct, 0.0);
    for (const auto& name : kpi_names()) EXPECT_TRUE(std::isfinite(kpi_value(r, name)));
    EXPECT_EQ(kpi_value(r, "mean_delay_ms"), r.mean_delay_ms);
}

TEST(Kpis, AggregateKeepsPerTrialValues) {
    KpiReport a, b;
    a.mean_delay_ms = 10;
    b.mean_delay_ms = 30;
    a.vehicle_delays_ms = {1, 2};
    b.vehicle_delays_ms = {3};
    KpiReport m = aggregate({a, b});
    EXPECT_DOUBLE_EQ(m.mean_delay_ms, 20.0);
    ASSERT_EQ(m.per_trial.size(), 2u);
    EXPECT_EQ(m.vehicle_delays_ms.size(), 3u);
    KpiStats st = kpi_stats(m, "mean_delay_ms");
    EXPECT_DOUBLE_EQ(st.mean, 20.0);
    EXPECT_NEAR(st.stddev, std::sqrt(200.0), 1e-12);
}

TEST(SignTest, ExactBinomialTails) {
    std::vector<double> lo(10, 1.0), hi(10, 2.0);
    SignTest all = paired_sign_test(lo, hi, true);
    EXPECT_EQ(all.wins, 10);
    EXPECT_NEAR(all.p_value, std::pow(0.5, 10), 1e-15);
    EXPECT_NEAR(paired_sign_test(lo, hi, false).p_value, 1.0, 1e-12);
    EXPECT_EQ(paired_sign_test(lo, lo, true).p_value, 1.0);
    EXPECT_EQ(paired_sign_test(lo, lo, true).ties, 10);

    std::vector<double> mixed_a{1, 1, 1, 1, 1, 2, 2, 2, 2, 2}, mixed_b(10, 1.5);
    // P(X >= 5) for X ~ Binomial(10, 1/2) = 638/1024.
    EXPECT_NEAR(paired_sign_test(mixed_a, mixed_b, true).p_value, 638.0 / 1024, 1e-12);
    EXPECT_THROW(paired_sign_test({1}, {1, 2}, true), PreconditionError);
}

TEST(Methods, NamesRoundTrip) {
    for (Method m : {Method::Proposed, Method::GproxK1, Method::SmfgK1, Method::FixedK2, Method::FixedK3})
        EXPECT_EQ(parse_method(to_string(m)), m);
    EXPECT_THROW(parse_method("oracle"), ConfigError);
}
