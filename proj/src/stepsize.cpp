#include "hmfg/stepsize.hpp"

#include <algorithm>
#include <cmath>

#include "hmfg/errors.hpp"
#include "hmfg/transport.hpp"

namespace hmfg {

double compute_c_h(int k_types, double lipschitz_l, double horizon_t, double phi_grad_max) {
    if (k_types < 1) throw PreconditionError("compute_c_h: k_types must be positive");
    const double K = k_types;
    return lipschitz_l * lipschitz_l * horizon_t * K * (K - 1.0) * phi_grad_max * phi_grad_max;
}

StepSizes adapt_step_from(int k_types, double h_k, double phi_grad_max, double lipschitz_l, double horizon_t,
                          double safety_margin, double delta_sat_value) {
    if (!(safety_margin > 0 && safety_margin < 1)) throw PreconditionError("adapt_step: safety margin outside (0,1)");
    if (!(lipschitz_l > 0)) throw PreconditionError("adapt_step: lipschitz constant must be positive");
    StepSizes s;
    s.h_k = h_k;
    s.delta_sat = delta_sat_value;
    const double K = k_types;
    s.c_h = compute_c_h(k_types, lipschitz_l, horizon_t, phi_grad_max) +
            lipschitz_l * lipschitz_l * horizon_t * K * (K - 1.0) * delta_sat_value * delta_sat_value;
    s.product = (1.0 - safety_margin) / (1.0 + s.c_h * s.h_k);
    s.xi = std::sqrt(s.product);
    s.varsigma = s.xi;
    return s;
}

StepSizes adapt_step(const StepSizeInputs& in) {
    if (in.densities.empty()) throw PreconditionError("adapt_step: no densities");
    if (in.dual_gradients.size() != in.densities.size())
        throw PreconditionError("adapt_step: one dual gradient per type is required");
    const int K = static_cast<int>(in.densities.size());
    double h = heterogeneity_measure_time_avg(in.densities);
    double phi_max = *std::max_element(in.dual_gradients.begin(), in.dual_gradients.end());
    double ds = (in.prev_snapshot && in.curr_snapshot) ? delta_sat(*in.prev_snapshot, *in.curr_snapshot, in.mu) : 0.0;
    return adapt_step_from(K, h, phi_max, in.lipschitz_l, in.horizon_t, in.safety_margin, ds);
}

StepSizes fixed_step(double product) {
    if (!(product > 0 && product < 1)) throw PreconditionError("fixed step product must lie in (0,1)");
    StepSizes s;
    s.product = product;
    s.xi = s.varsigma = std::sqrt(product);
    return s;
}

bool check_sufficient_condition(double xi, double varsigma, double c_h, double h_k) {
    return xi * varsigma < 1.0 / (1.0 + c_h * h_k);
}

double dual_gradient_sup(const Field& phi) {
    const Grid& g = phi.grid;
    double m = 0.0;
    for (int j = 0; j < g.slices(); ++j) {
        auto s = phi.slice(j);
        for (int i = 1; i + 1 < g.n_q; ++i) m = std::max(m, std::abs(s[i + 1] - s[i - 1]) / (2.0 * g.dq));
    }
    return m;
}

}  // namespace hmfg
