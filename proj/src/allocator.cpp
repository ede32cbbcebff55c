#include "darap/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "darap/belief.hpp"

namespace darap {

namespace {

// Kahan-compensated running sum; the breakpoint scan subtracts large nearly
// equal partial sums, so plain accumulation can misplace the support size.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

int count_support(const std::vector<double>& effort) {
    int k = 0;
    for (double v : effort)
        if (v > 0.0) ++k;
    return k;
}

}  // namespace

double Allocation::total() const {
    return std::accumulate(effort.begin(), effort.end(), 0.0);
}

std::vector<double> myopic_breakpoints(const BeliefState& belief, double sigma2) {
    const auto q = belief.probs.size();
    std::vector<std::size_t> order(q);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::sqrt(belief.probs[a]) * belief.vars[a] >
               std::sqrt(belief.probs[b]) * belief.vars[b];
    });
    std::vector<double> g;
    g.reserve(q > 0 ? q - 1 : 0);
    CompensatedSum sum_root_p;
    CompensatedSum sum_c;
    for (std::size_t k = 1; k < q; ++k) {
        const std::size_t prev = order[k - 1];
        sum_root_p.add(std::sqrt(belief.probs[prev]));
        sum_c.add(sigma2 / belief.vars[prev]);
        const std::size_t next = order[k];
        const double c_next = sigma2 / belief.vars[next];
        g.push_back(c_next / std::sqrt(belief.probs[next]) * sum_root_p.sum - sum_c.sum);
    }
    return g;
}

Allocation myopic_allocate(const BeliefState& belief, double budget, double sigma2) {
    if (!(budget > 0.0)) throw std::invalid_argument("budget must be positive");
    const auto q = belief.probs.size();
    for (std::size_t i = 0; i < q; ++i) {
        if (!std::isfinite(belief.probs[i]) || !std::isfinite(belief.vars[i]) ||
            !(belief.vars[i] > 0.0) || !(belief.probs[i] > 0.0))
            throw std::invalid_argument("belief entries must be finite and positive");
    }

    std::vector<std::size_t> order(q);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::sqrt(belief.probs[a]) * belief.vars[a] >
               std::sqrt(belief.probs[b]) * belief.vars[b];
    });

    // Walk the breakpoint sequence until g(k) >= budget; g is non-decreasing
    // so the first hit identifies the support size.
    CompensatedSum sum_root_p;
    CompensatedSum sum_c;
    std::size_t k_star = q;
    double support_root_p = 0.0;
    double support_c = 0.0;
    for (std::size_t k = 1; k < q; ++k) {
        const std::size_t prev = order[k - 1];
        sum_root_p.add(std::sqrt(belief.probs[prev]));
        sum_c.add(sigma2 / belief.vars[prev]);
        const std::size_t next = order[k];
        const double c_next = sigma2 / belief.vars[next];
        const double g_k = c_next / std::sqrt(belief.probs[next]) * sum_root_p.sum - sum_c.sum;
        if (budget <= g_k) {
            k_star = k;
            support_root_p = sum_root_p.sum;
            support_c = sum_c.sum;
            break;
        }
    }
    if (k_star == q) {
        sum_root_p.add(std::sqrt(belief.probs[order[q - 1]]));
        sum_c.add(sigma2 / belief.vars[order[q - 1]]);
        support_root_p = sum_root_p.sum;
        support_c = sum_c.sum;
    }

    Allocation alloc;
    alloc.stage = belief.stage;
    alloc.budget = budget;
    alloc.effort.assign(q, 0.0);
    const double level = (budget + support_c) / support_root_p;
    for (std::size_t k = 0; k < k_star; ++k) {
        const std::size_t i = order[k];
        const double v = level * std::sqrt(belief.probs[i]) - sigma2 / belief.vars[i];
        alloc.effort[i] = v > 0.0 ? v : 0.0;
    }
    alloc.support_size = count_support(alloc.effort);
    return alloc;
}

Allocation uniform_allocate(int q, double budget, int stage) {
    if (!(budget > 0.0)) throw std::invalid_argument("budget must be positive");
    Allocation alloc;
    alloc.stage = stage;
    alloc.budget = budget;
    alloc.effort.assign(static_cast<std::size_t>(q), budget / static_cast<double>(q));
    alloc.support_size = q;
    return alloc;
}

Allocation darap_allocate(const BeliefState& belief, double budget, double kappa,
                          double sigma2) {
    if (kappa < 0.0 || kappa > 1.0)
        throw std::invalid_argument("exploration coefficient must be in [0,1]");
    const int q = static_cast<int>(belief.probs.size());
    if (kappa >= 1.0) return uniform_allocate(q, budget, belief.stage);
    Allocation myopic = myopic_allocate(belief, budget, sigma2);
    if (kappa <= 0.0) return myopic;
    const double share = kappa * budget / static_cast<double>(q);
    for (auto& v : myopic.effort) v = share + (1.0 - kappa) * v;
    myopic.support_size = count_support(myopic.effort);
    return myopic;
}

Allocation omniscient_allocate(const SceneState& scene, double budget, int q) {
    if (scene.targets.empty()) return uniform_allocate(q, budget, scene.stage);
    Allocation alloc;
    alloc.stage = scene.stage;
    alloc.budget = budget;
    alloc.effort.assign(static_cast<std::size_t>(q), 0.0);
    const double share = budget / static_cast<double>(scene.targets.size());
    for (const auto& t : scene.targets) alloc.effort[static_cast<std::size_t>(t.cell)] = share;
    alloc.support_size = static_cast<int>(scene.targets.size());
    return alloc;
}

Allocation semi_omniscient_allocate(const BeliefState& oracle_belief, double budget,
                                    double sigma2) {
    return myopic_allocate(oracle_belief, budget, sigma2);
}

}  // namespace darap
