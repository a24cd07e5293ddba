#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hmfg/grid.hpp"
#include "hmfg/leo.hpp"
#include "hmfg/model.hpp"
#include "hmfg/params.hpp"

namespace hmfg {

struct StepMode {
    enum class Kind { Adaptive, Fixed } kind = Kind::Adaptive;
    double product = 0.99;  // used when kind == Fixed

    static StepMode adaptive() { return {Kind::Adaptive, 0.0}; }
    static StepMode fixed(double p) { return {Kind::Fixed, p}; }
};

struct PriceParams {
    double kappa = 1.0;
    double varrho = 0.002;
    double mu = 0.5;
};

struct SolverConfig {
    int max_iterations = 500;
    double tolerance = 1e-3;
    StepMode step = StepMode::adaptive();
    double safety_margin = 0.01;
    // Constant L of the step-size rule, in nondimensional units.
    double lipschitz_l = 0.35;
    // Diagonal scaling of the step pair: the solver uses (r xi, varsigma / r), keeping the product.
    double primal_dual_ratio = 8.0;
    // Momentum proximal step relative to the density step (diagonal preconditioner).
    double momentum_step_scale = 1.0;
    PriceParams price;
    double divergence_bound = 1e6;
    // Stop early once the residual has converged; off for fixed-length traces.
    bool stop_on_tolerance = true;
    // When false a diverging run returns its partial history with diverged = true.
    bool throw_on_divergence = true;
    // Exogenous price per time slice; empty means the price follows the iterate.
    std::vector<double> price_override;
};

void validate(const SolverConfig& c);

// Shared coupling fields per time slice.
struct Coupling {
    std::vector<double> interference;
    std::vector<double> price;
};

struct IterationRecord {
    int iteration = 0;
    double residual = 0;
    double step_product = 0;
    double h_k = 0;
    double mass_error = 0;
    double density_change = 0;  // Picard only
    double seconds = 0;         // wall time of the iteration
    double c_h = 0;
    double delta_sat = 0;
    double xi = 0;              // primal step of the rule, before the primal/dual scaling
};

struct EquilibriumSolution {
    Grid grid;
    ChannelParams channel;
    std::vector<TypeParams> types;
    std::vector<double> proportions;
    std::vector<int> class_counts;
    std::vector<Density> densities;
    std::vector<DualPotential> potentials;
    std::vector<PowerField> policies;
    std::vector<Field> drifts;
    Coupling coupling;
    std::vector<IterationRecord> history;
    int iterations = 0;
    bool converged = false;
    bool diverged = false;
    std::string note;
    // Solution type used by each native type of the fleet the solution stands for.
    std::vector<int> type_map;

    int k_types() const { return static_cast<int>(densities.size()); }
    double final_residual() const { return history.empty() ? 0.0 : history.back().residual; }
};

// Reference scale of the potentials: max_k C_k q_max^2.
double value_scale(const FleetConfig& f);

Coupling compute_coupling(const FleetConfig& f, const std::vector<Density>& densities,
                          const std::vector<PowerField>& policies, const ChannelParams& ch,
                          const std::vector<Snapshot>& snapshots, const PriceParams& price);

// Coupling with no interference and the base price kappa + mu / B_sat.
Coupling idle_coupling(const Grid& g, const std::vector<Snapshot>& snapshots, const PriceParams& price);

// One explicit step of the conservative upwind scheme with reflecting boundaries.
// Throws StabilityError when a node would lose more than 0.9 of its mass.
std::vector<double> fpk_step(std::span<const double> rho, std::span<const double> drift, double sigma,
                             const Grid& g);

// Largest fraction of a node's mass leaving it in one step.
double fpk_outflow_ratio(std::span<const double> drift, double sigma, const Grid& g);

// Rolls rho0 forward under a drift field; slice n_t uses drift slice n_t - 1.
Density fpk_rollout(std::span<const double> rho0, const Field& drift, double sigma);

// Upwind Hamiltonian sweep of one slice of the potential.
struct HamiltonianSlice {
    std::vector<double> value, power, drift;
};
HamiltonianSlice hamiltonian_slice(std::span<const double> v_next, const LinkModel& link, double data_rate,
                                   const Grid& g);

// Terminal potential c q^2 on the state nodes.
std::vector<double> terminal_cost(const Grid& g, double c);

// nu * L_w v with the trapezoid-weighted Neumann Laplacian.
void weighted_laplacian(std::span<const double> v, const Grid& g, std::span<double> out);

// Per-slice residual (V_j - V_{j+1})/dt - nu L_w V_{j+1} - H_j(V_{j+1}), j = 0..n_t-1.
Field hjb_residual_field(const DualPotential& v, const TypeParams& tp, const ChannelParams& ch,
                         const Coupling& coupling);

// Nondimensional L2 norm of the residual field (time scaled by T, state by q_max, values by v_ref).
double hjb_residual(const DualPotential& v, const TypeParams& tp, const ChannelParams& ch, const Coupling& coupling,
                    double v_ref);

// Explicit backward sweep that satisfies the discrete HJB exactly.
DualPotential hjb_sweep(const TypeParams& tp, const ChannelParams& ch, const Coupling& coupling, const Grid& g);

// Continuity residual C_j = (rho_{j+1} - rho_j)/dt + div(flux_j) for j = 0..n_t-2, as an
// (n_t - 1) x n_q time-major array. m_plus/m_minus are the nodal upward/downward momentum.
std::vector<double> continuity_residual(const Density& rho, const Field& m_plus, const Field& m_minus,
                                        double sigma);

class SpaceTimePoisson;

// Adds varsigma * v_ref * M^{-1}(-C q_max T) to slices 1..n_t-1 of the potential.
void dual_update(DualPotential& v, const Density& rho_bar, const Field& m_plus_bar, const Field& m_minus_bar,
                 double sigma, double varsigma, double v_ref, const SpaceTimePoisson& poisson);

SpaceTimePoisson make_dual_poisson(const Grid& g);

EquilibriumSolution pdhg_solve(const FleetConfig& fleet, const ChannelParams& ch, const SolverConfig& cfg,
                               const std::vector<Snapshot>& snapshots);

struct PicardOptions {
    double damping = 0.3;
    double tolerance = 1e-5;
    int max_iterations = 200;
    // Backward Euler in the diffusion term of the HJB sweep; false uses the
    // explicit sweep that pdhg_solve's residual is defined on.
    bool implicit_diffusion = true;
};

EquilibriumSolution picard_solve(const FleetConfig& fleet, const ChannelParams& ch, const SolverConfig& cfg,
                                 const std::vector<Snapshot>& snapshots, const PicardOptions& opt = {});

enum class BaselineKind { GproxK1, SmfgK1, FixedK2, FixedK3 };
BaselineKind parse_baseline(const std::string& s);
std::string to_string(BaselineKind k);

EquilibriumSolution baseline_solve(BaselineKind kind, const FleetConfig& fleet, const ChannelParams& ch,
                                   const SolverConfig& cfg, const std::vector<Snapshot>& snapshots);

// Largest attainable drift magnitude over the fleet.
double max_drift(const FleetConfig& f, const ChannelParams& ch);

struct SpreadBoundCheck {
    bool holds = true;
    double worst_ratio = 0;  // max of lhs / rhs over slices and pairs
};
// W2(rho_t^k, rho_t^k') <= e^{L_b T}[W2(rho_0^k, rho_0^k') + |theta_k - theta_k'| L_b T] at every slice.
SpreadBoundCheck check_type_spread_bound(const EquilibriumSolution& s, double l_b);

void write_solution_csv(std::ostream& os, const EquilibriumSolution& s);
void write_residual_csv(std::ostream& os, const EquilibriumSolution& s);

}  // namespace hmfg
