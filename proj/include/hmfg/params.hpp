#pragma once

#include <cmath>
#include <vector>

#include "hmfg/grid.hpp"

namespace hmfg {

// D(t) = base * (1 + amplitude * sin(2 pi t / period)), in data units per second.
struct DataRate {
    double base = 0.0;
    double amplitude = 0.0;
    double period = 1.0;
    double operator()(double t) const;
    double max() const { return base * (1.0 + std::abs(amplitude)); }
};

struct TypeParams {
    double theta = 0.0;
    double beta1 = 0.5;
    double beta2 = 1.0;
    double terminal_c = 0.5;
    double sigma = 2.0;
    DataRate data_rate;
};

// WINNER+ B1 (LoS) path loss in dB at distance d metres and carrier fc Hz.
double winner_b1_path_loss_db(double d, double fc_hz);

struct ChannelParams {
    double bandwidth_b = 10e6;       // Hz
    double noise = 1e-13;            // W
    double p_max = 0.2;              // W
    double carrier_hz = 5.9e9;
    double d0 = 100.0;               // m, nearest vehicle-RSU distance
    double d_max = 500.0;            // m
    double shadowing_db = 8.0;
    double bits_per_unit = 1e6;      // bits in one queue data unit
    double energy_scale = 2500.0;    // weight of beta1 * p^2 in cost per second, 1/(W^2 s)
    double cross_gain = 1e-17;       // |h|^2 of interferers seen at the receiver
    double reference_distance = 300.0;  // distance behind the solver's representative gain

    // Gain used by the mean-field solver (path loss at reference_distance, no shadowing).
    double representative_gain() const;
    // Peak link rate in data units/s at p_max with the representative gain and no interference.
    double peak_rate_units() const;
};

void validate(const ChannelParams& c);

struct FleetConfig {
    Grid grid;
    int n_vehicles = 1;
    int k_types = 1;
    std::vector<double> proportions;
    std::vector<TypeParams> types;
    std::vector<std::vector<double>> rho0;  // one state slice per type

    std::vector<int> class_counts() const;
};

void validate(const FleetConfig& f);

// round(lambda_k * n) with the largest-remainder correction so the counts sum to n.
std::vector<int> largest_remainder_counts(const std::vector<double>& proportions, int n);

// Type parameters interpolated through the three anchor types at theta = 0, 1/2, 1.
TypeParams reference_type(double theta);

// K types at theta_k = (k-1)/(K-1) (theta = 1/2 when K = 1), truncated Gaussian
// initial densities centred at q_max k/(K+1) with standard deviation 0.1 q_max.
FleetConfig make_reference_fleet(const Grid& g, int n_vehicles, int k_types,
                                 std::vector<double> proportions = {});

// Merge adjacent types into k_target groups of near-equal size. Parameters are
// population-weighted means and initial densities are mixtures. `group_of`
// receives the merged index of each original type.
FleetConfig merge_types(const FleetConfig& f, int k_target, std::vector<int>* group_of = nullptr);

// Scale the spread of the cost weights and data rates around their population means.
FleetConfig scale_heterogeneity(const FleetConfig& f, double factor);

}  // namespace hmfg
