#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "darap/model.hpp"
#include "darap/policy.hpp"

namespace darap {

enum class PolicyKind {
    uniform,
    myopic,
    darap,
    offline_rollout,
    myopic_plus,
    online_rollout,
    omniscient,
    semi_omniscient,
};

std::string policy_name(PolicyKind kind);
PolicyKind policy_from_name(const std::string& name);

struct PolicySpec {
    PolicyKind kind = PolicyKind::uniform;
    KappaSchedule schedule;  // used by darap and pre-trained policies
    bool has_schedule = false;
    int t0 = 5;            // base tail length for rollout policies
    double rho = 0.1;      // myopic+ tolerance
    int train_mc = 100;    // Monte Carlo trials per training estimate
    int online_mc = 100;   // futures per online decision
    std::vector<double> kappa_grid;  // empty -> default 21-point grid
};

enum class ScenarioKind { standard, mismatch, missing };

std::string scenario_name(ScenarioKind kind);
ScenarioKind scenario_from_name(const std::string& name);

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::standard;
    double theta0 = 1.0;  // true constant amplitude under mismatch
    int on_stages = 6;    // observed stages per missing-data cycle
    int off_stages = 3;   // masked stages per cycle
};

struct ScenarioConfig {
    ModelParams params;
    double snr_db = 10.0;
    bool explicit_budgets = false;  // budgets given directly, snr_db derived
    PolicySpec policy;
    ScenarioSpec scenario;
    int trials = 100;
    std::uint64_t seed = 1;
    int threads = 1;
    bool collect_detection = true;
    double pfa = 1e-4;
};

double snr_to_budget(double snr_db, int q, double sigma2);
double budget_to_snr(double budget, int q, double sigma2);

// Fills budgets from the SNR when not explicit, applies the missing-data
// mask, trains the policy schedule when one is required but absent, and
// validates the result.
void resolve_config(ScenarioConfig& config);

struct EpisodeMetrics {
    std::vector<double> sq_err_sum;   // per stage, summed over true targets
    std::vector<int> target_count;    // per stage
    std::vector<double> stage_cost;   // planning cost M_t
    double total_cost = 0.0;          // gamma-weighted
    double weighted_mse = 0.0;        // gamma-weighted per-stage mean MSE
    bool weighted_mse_valid = false;
    // Updated presence probabilities split by ground truth, per stage;
    // only filled when detection collection is on.
    std::vector<std::vector<float>> target_scores;
    std::vector<std::vector<float>> nontarget_scores;
};

// One closed-loop episode of the configured policy on the configured
// scenario. Scene and noise substreams depend only on (seed, trial), so
// different policies see identical realizations.
EpisodeMetrics run_episode(const ScenarioConfig& config, int trial);

struct PolicyResult {
    std::string name;
    std::vector<double> per_trial_mse;   // NaN when the trial had no weighted targets
    std::vector<double> per_trial_cost;
    std::vector<double> stage_mse;       // pooled sq error / pooled count
    std::vector<double> stage_cost;      // mean over trials
    std::vector<double> pd;              // per stage, at the configured Pfa
    double mse_mean = 0.0;
    double mse_se = 0.0;
    double cost_mean = 0.0;
    double cost_se = 0.0;
    double wall_seconds = 0.0;
};

struct EvaluationReport {
    PolicyResult policy;
    PolicyResult uniform;
    double mse_gain_db = 0.0;
    double mse_gain_se_db = 0.0;
    double cost_gain_db = 0.0;
    double pfa = 1e-4;
    int trials = 0;
    std::uint64_t seed = 0;
};

// Paired evaluation of the configured policy against the uniform baseline on
// shared scene/noise realizations.
EvaluationReport evaluate(const ScenarioConfig& config);

// Aggregation helper shared by evaluate() and the tests.
PolicyResult aggregate_trials(const ScenarioConfig& config,
                              const std::vector<EpisodeMetrics>& trials,
                              const std::string& name);

}  // namespace darap
