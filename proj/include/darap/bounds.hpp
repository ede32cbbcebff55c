#pragma once

#include <vector>

namespace darap {

struct ModelParams;

// Scalar inputs for the oracle-policy gain bounds. The per-stage budget is
// constant, so the cumulative budget through stage t is budget * t.
struct BoundInputs {
    double p0 = 0.01;
    int q = 1000;
    double noise_var = 1.0;  // sigma^2
    double prior_var = 1.0 / 36.0;  // sigma0^2
    double walk_var = 1.0 / 400.0;  // Delta^2
    double stay_prob = 1.0 / 3.0;   // pi0
    int neighbor_count = 2;         // |G|
    double budget = 10000.0;        // Lambda per stage
    std::vector<double> gamma;      // stage weights, length horizon
    int horizon = 20;

    static BoundInputs from_params(const ModelParams& params);

    double cumulative_budget(int t) const { return budget * static_cast<double>(t); }
    double r_static(int t) const;   // sigma^2 q / (sigma0^2 Lambda t)
    double r_dynamic() const;       // sigma^2 q / (Delta^2 Lambda)
    double q_dynamic() const;       // (1 + |G|) r_dynamic
    // sqrt(|G| pi0 / (1 - pi0)) - 1; +inf at pi0 = 1.
    double exploration_margin() const;
    double critical_precision(double num_targets) const;
    double sparsity_limit() const;  // 1 / (p0 + (1 - p0)/q)
};

double gain(double uniform_cost, double policy_cost);
double gain_db(double uniform_cost, double policy_cost);

struct StaticBound {
    double bound = 0.0;
    double limit = 0.0;  // high-SNR / long-horizon limit
};

// Gain ceiling of the location-clairvoyant policy with constant amplitudes:
// ratio of gamma-weighted per-stage cost floors, third-order correction in
// the target-count moments included.
StaticBound bound_omniscient_static(const BoundInputs& in);

struct CbarResult {
    std::vector<double> values;  // cbar(1..t_max)
    bool assumption_ok = true;   // stay_prob >= (1 - stay_prob)/|G|
};

// Two-regime recursion bounding the expected posterior precision of the
// previous-location oracle, conditioned on the initial target count.
CbarResult cbar_recursion(const BoundInputs& in, double num_targets, int t_max);

// Drifting-amplitude generalization: above the critical precision the update
// saturates through the diffusion ratio sigma^2/Delta^2 and converges to a
// finite fixed point (the positive root of the steady-state cubic). Reduces
// to the constant-amplitude recursion as walk_var -> 0.
CbarResult cbar_recursion_dynamic(const BoundInputs& in, double num_targets, int t_max);

struct SemiStaticBound {
    double per_stage_cost_floor = 0.0;  // leading 1/t term
    double gain_limit = 0.0;            // pi0 / (p0 + (1-p0)/q)
};

SemiStaticBound bound_semi_static(const BoundInputs& in, int t);

// Fixed point of the measurement/diffusion variance recursion for a target
// receiving constant effort; +inf when no effort is applied.
double steady_state_variance(double walk_var, double noise_var, double lambda_per_target);

struct DynamicBound {
    double bound = 0.0;
    double limit = 0.0;
};

// Steady-state gain ceiling of the location-clairvoyant policy with drifting
// amplitudes.
DynamicBound bound_omniscient_dynamic(const BoundInputs& in);

struct ConditionedBound {
    double bound = 0.0;
    bool condition_ok = false;
};

// Steady-state gain ceiling of the previous-location oracle; provable only
// when r_dynamic * (exploration_margin + 1) <= 1.
ConditionedBound bound_semi_dynamic(const BoundInputs& in);

// Low-diffusion regime value sqrt(pi0 / p0); provable when
// sqrt(pi0 sigma^2 / (Delta^2 Lambda)) * exploration_margin >= 1.
ConditionedBound bound_semi_small(const BoundInputs& in);

// Positive root of pi0 x^3 - a1 (a1 + a2) x - a1^2 a2 = 0 for the inverse
// steady-state precision, a1 = Delta^2/sigma^2, a2 = targets/Lambda.
double steady_state_inverse_precision_trig(double stay_prob, double a1, double a2);
double steady_state_inverse_precision_bisect(double stay_prob, double a1, double a2);

struct CombinedBound {
    double bound = 0.0;
    double omniscient = 0.0;
    double semi = 0.0;
    bool semi_condition_ok = false;
    bool used_semi = false;
};

// min of the two dynamic bounds, with regime flags for plotting.
CombinedBound combined_bound(const BoundInputs& in);

}  // namespace darap
