#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "darap/allocator.hpp"
#include "darap/belief.hpp"
#include "darap/model.hpp"

namespace darap {

// Exploration schedule kappa(1..T) defining one D-ARAP policy.
struct KappaSchedule {
    enum class Provenance { manual, myopic, uniform, offline_rollout, myopic_plus };

    std::vector<double> kappas;
    Provenance provenance = Provenance::manual;
    int base_length = 0;  // T0 behind offline rollout schedules
    double rho = 0.0;     // myopic+ tolerance

    static KappaSchedule myopic(int horizon);
    static KappaSchedule uniform(int horizon);
};

std::string provenance_name(KappaSchedule::Provenance p);

struct CostEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long num_trials = 0;
};

// Per-stage planning cost sum_i p_i / (sigma^2 / sigma_i^2 + lambda_i).
double per_stage_cost(const BeliefState& belief, const Allocation& alloc, double sigma2);

// gamma-weighted total of per-stage costs.
double total_cost(const std::vector<double>& stage_costs, const std::vector<double>& gamma);

// Stage weights for a tau-stage lookahead: last-stage-only weighting stays
// last-stage-only, anything else is truncated and renormalized.
std::vector<double> truncated_gamma(const ModelParams& params, int tau);

// One closed-loop trial under a D-ARAP exploration schedule. The belief is
// always in the predicted flavor for the current stage.
struct DarapTrialState {
    SceneState scene;
    BeliefState belief;
    Rng rng_scene;
    Rng rng_noise;
    std::vector<double> stage_costs;
    int t = 1;
};

DarapTrialState init_trial(const ModelParams& params, std::uint64_t root_seed,
                           std::uint64_t trial);

// Runs one stage with exploration coefficient kappa, recording the stage
// cost. When advance_world is set, the belief is re-predicted and the scene
// stepped to the next stage.
void advance_stage(const ModelParams& params, DarapTrialState& state, double kappa,
                   bool advance_world);

// Monte Carlo estimate of the gamma-weighted policy cost over full episodes.
CostEstimate estimate_policy_cost(const ModelParams& params, const KappaSchedule& schedule,
                                  int num_trials, std::uint64_t seed, int threads = 1);

struct OfflineRolloutResult {
    // Schedules for horizons T0+1 .. T; back() is the full-horizon policy.
    std::vector<KappaSchedule> schedules;

    const KappaSchedule& final_schedule() const { return schedules.back(); }
};

// Recursive horizon-extension training: each iteration line-searches the
// single coefficient preceding the fixed base tail, reusing common random
// futures across the grid.
OfflineRolloutResult train_offline_rollout(const ModelParams& params,
                                           const std::vector<double>& base_tail,
                                           const std::vector<double>& kappa_grid,
                                           int num_mc, std::uint64_t seed,
                                           int threads = 1);

struct MyopicPlusStageRecord {
    int stage = 0;
    std::vector<double> grid;
    std::vector<double> b_values;  // estimated B per grid point
    double b_zero = 0.0;           // reference B at kappa = 0
    double chosen = 0.0;
};

struct MyopicPlusResult {
    KappaSchedule schedule;
    std::vector<MyopicPlusStageRecord> records;
};

// (1+rho)-suboptimality training: per stage keeps the largest exploration
// coefficient whose expected stage cost stays within (1+rho) of the myopic
// minimum.
MyopicPlusResult train_myopic_plus(const ModelParams& params, double rho,
                                   const std::vector<double>& kappa_grid, int num_mc,
                                   std::uint64_t seed, int threads = 1);

// Single online rollout decision: samples futures from the current belief and
// picks the grid coefficient minimizing the estimated remaining cost with the
// base tail appended. Stage 1 is forced to 1, the final stage to 0.
double online_rollout_step(const ModelParams& params, const BeliefState& belief,
                           int current_stage, const std::vector<double>& base_tail,
                           const std::vector<double>& kappa_grid, int num_mc, Rng& rng);

// Default exploration grid {0, 0.05, ..., 1}.
std::vector<double> default_kappa_grid();

}  // namespace darap
