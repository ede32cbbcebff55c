#pragma once

#include <vector>

#include "darap/model.hpp"

namespace darap {

// Factored posterior approximation: per cell, the probability a target is
// present and the Gaussian amplitude moments conditioned on presence.
// `predicted` means conditioned on measurements through the previous stage,
// `updated` means the current stage's measurement has been absorbed.
struct BeliefState {
    enum class Flavor { predicted, updated };

    int stage = 1;
    Flavor flavor = Flavor::predicted;
    std::vector<double> probs;
    std::vector<double> means;
    std::vector<double> vars;

    double precision(int cell, double sigma2) const {
        return sigma2 / vars[static_cast<std::size_t>(cell)];
    }
};

inline constexpr double kProbClamp = 1e-12;

double clamp_prob(double p);

BeliefState belief_init(const ModelParams& params);

// Per-cell Bayes update: conjugate Gaussian update of the amplitude moments
// with observation gain sqrt(lambda), presence probability updated by the
// likelihood ratio of N(sqrt(lambda) mu, lambda sigma_i^2 + sigma^2) against
// pure noise. Cells with no effort or masked out are left untouched.
BeliefState belief_update(const ModelParams& params, const BeliefState& belief,
                          const Observation& obs);

// Mixture propagation of the presence probabilities through the motion and
// birth/death kernel; amplitude moments follow the single most likely source
// (ties resolved to self, then lowest cell index).
BeliefState belief_predict(const ModelParams& params, const BeliefState& belief);

enum class OracleMode { none, semi_omniscient, omniscient };

// Assembles the planning belief of an oracle policy from its location
// knowledge: atomic probabilities for omniscient (positions = current ROI),
// one-step transition probabilities for semi-omniscient (positions = previous
// ROI). Amplitude moments are supplied by the caller's oracle filter.
BeliefState oracle_belief(const ModelParams& params, OracleMode mode,
                          const std::vector<int>& positions, int stage,
                          const std::vector<double>& means,
                          const std::vector<double>& vars);

// Amplitude tracker for oracle policies. Probabilities come from the location
// knowledge each stage; means and variances obey the exact conditional
// recursion, sourcing each neighborhood from its true previous target cell.
class OracleFilter {
  public:
    OracleFilter(const ModelParams& params, OracleMode mode);

    // Planning belief for the current stage. `current` is the true ROI at
    // this stage, `previous` the ROI one stage back (ignored at stage 1).
    BeliefState planning_belief(const std::vector<int>& current,
                                const std::vector<int>& previous) const;

    // Absorb the stage measurement into the amplitude moments.
    void update(const Observation& obs);

    // Advance to the next stage, propagating each true target's posterior
    // onto its closed neighborhood.
    void predict(const std::vector<int>& current_positions);

    int stage() const { return stage_; }
    const std::vector<double>& means() const { return means_; }
    const std::vector<double>& vars() const { return vars_; }

  private:
    const ModelParams* params_;
    OracleMode mode_;
    int stage_ = 1;
    std::vector<double> means_;
    std::vector<double> vars_;
};

}  // namespace darap
