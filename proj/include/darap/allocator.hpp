#pragma once

#include <vector>

#include "darap/model.hpp"

namespace darap {

struct BeliefState;

// Per-stage effort vector. Nonnegative, sums to the stage budget,
// support_size counts the strictly positive entries.
struct Allocation {
    int stage = 1;
    std::vector<double> effort;
    double budget = 0.0;
    int support_size = 0;

    double total() const;
};

// Closed-form minimizer of the per-stage cost sum p_i / (c_i + lambda_i)
// subject to the budget: cells are ranked by sqrt(p_i) * sigma_i^2 (ties to
// the lower index), the support size comes from the breakpoint sequence g(k),
// and the water level equalizes p_i / (c_i + lambda_i)^2 on the support.
Allocation myopic_allocate(const BeliefState& belief, double budget, double sigma2);

Allocation uniform_allocate(int q, double budget, int stage);

// Exploration blend: kappa * uniform + (1 - kappa) * myopic.
Allocation darap_allocate(const BeliefState& belief, double budget, double kappa,
                          double sigma2);

// Splits the budget evenly over the true target cells; uniform fallback when
// the scene is empty.
Allocation omniscient_allocate(const SceneState& scene, double budget, int q);

// Myopic allocation on the previous-location oracle belief.
Allocation semi_omniscient_allocate(const BeliefState& oracle_belief, double budget,
                                    double sigma2);

// Breakpoint sequence g(1..q-1) for a sorted belief; exposed for tests.
std::vector<double> myopic_breakpoints(const BeliefState& belief, double sigma2);

}  // namespace darap
