#pragma once

#include <vector>

#include "hmfg/grid.hpp"
#include "hmfg/leo.hpp"
#include "hmfg/params.hpp"

namespace hmfg {

// Shannon rate B log2(1 + p g / (noise + I)) in bit/s.
double sinr_rate(double p, double gain, double noise, double interference, double bandwidth);

// Sum_k N_k * int p_k |h_k|^2 rho_k dq + I_sat at time slice j.
double mean_field_interference(const std::vector<const Density*>& densities,
                               const std::vector<const PowerField*>& policies, const std::vector<int>& class_counts,
                               const std::vector<double>& cross_gains, int time_index, double i_sat = 0.0);

// kappa + varrho * int R rho_mix dq + mu / B_sat at time slice j; rates in data units/s.
double computational_price(const std::vector<const Density*>& densities, const std::vector<const Field*>& rates,
                           const std::vector<double>& proportions, int time_index, const Snapshot& snapshot,
                           double kappa, double varrho, double mu);

// Per-node link model for one type: rate in data units/s, running cost per second.
struct LinkModel {
    double c0 = 0;        // bandwidth / (bits_per_unit ln 2)
    double gain = 0;
    double noise_eff = 0; // noise + interference
    double p_max = 0;
    double energy = 0;    // energy_scale * beta1
    double price_w = 0;   // beta2 * price

    double rate(double p) const;
    double rate_derivative(double p) const;
    double running_cost(double p) const { return energy * p * p + price_w * rate(p); }
    // Smallest power reaching rate r (may exceed p_max).
    double power_for_rate(double r) const;
};

LinkModel make_link(const ChannelParams& ch, const TypeParams& tp, double price, double interference);

// argmin over [0, p_max] of energy p^2 + price_w R(p) + dV_dq (D - R(p)).
double optimal_power(double dV_dq, double price, const TypeParams& tp, const ChannelParams& ch, double interference);
double optimal_power(const LinkModel& link, double dV_dq);

struct HamiltonianPoint {
    double value = 0;  // min over p of running cost + drift * one-sided gradient
    double power = 0;
    double drift = 0;  // D - R(p*)
};

// Monotone upwind Hamiltonian: the forward difference prices upward drift and
// the backward difference prices downward drift. A missing side (boundary)
// passes has_plus/has_minus = false and carries no transport cost.
HamiltonianPoint upwind_hamiltonian(const LinkModel& link, double data_rate, double grad_plus, double grad_minus,
                                    bool has_plus, bool has_minus);

// Same minimisation with the proximal term (lambda/2)(drift - drift_ref)^2 added;
// lambda = 0 reduces to upwind_hamiltonian. `value` excludes the proximal term.
HamiltonianPoint proximal_control(const LinkModel& link, double data_rate, double grad_plus, double grad_minus,
                                  bool has_plus, bool has_minus, double lambda, double drift_ref);

// Running cost plus upwind transport of a given drift.
double control_cost(const LinkModel& link, double data_rate, double drift, double grad_plus, double grad_minus,
                    bool has_plus, bool has_minus);

}  // namespace hmfg
