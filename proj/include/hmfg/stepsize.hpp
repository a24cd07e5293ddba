#pragma once

#include <vector>

#include "hmfg/grid.hpp"
#include "hmfg/leo.hpp"

namespace hmfg {

struct StepSizeInputs {
    std::vector<const Density*> densities;
    std::vector<double> dual_gradients;  // per-type sup-norm of d(phi)/dq
    double lipschitz_l = 1.0;
    double horizon_t = 1.0;
    double safety_margin = 0.01;
    const Snapshot* prev_snapshot = nullptr;
    const Snapshot* curr_snapshot = nullptr;
    double mu = 0.0;
};

struct StepSizes {
    double xi = 0, varsigma = 0, product = 0, c_h = 0, h_k = 0, delta_sat = 0;
};

double compute_c_h(int k_types, double lipschitz_l, double horizon_t, double phi_grad_max);

StepSizes adapt_step(const StepSizeInputs& in);

// Same rule with a precomputed heterogeneity measure.
StepSizes adapt_step_from(int k_types, double h_k, double phi_grad_max, double lipschitz_l, double horizon_t,
                          double safety_margin, double delta_sat_value);

StepSizes fixed_step(double product);

bool check_sufficient_condition(double xi, double varsigma, double c_h, double h_k);

// Sup-norm of the centred state difference of one potential over all slices.
double dual_gradient_sup(const Field& phi);

}  // namespace hmfg
