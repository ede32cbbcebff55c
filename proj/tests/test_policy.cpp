#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "darap/policy.hpp"

using namespace darap;

namespace {

// Spearman rank correlation with average ranks for ties.
double rank_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const std::vector<double> rx = ranks(x);
    const std::vector<double> ry = ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0.0 || dy == 0.0) return 0.0;
    return num / std::sqrt(dx * dy);
}

BeliefState flat_belief(int q, double p, double var, int stage = 1) {
    BeliefState b;
    b.stage = stage;
    b.flavor = BeliefState::Flavor::predicted;
    b.probs.assign(static_cast<std::size_t>(q), p);
    b.means.assign(static_cast<std::size_t>(q), 1.0);
    b.vars.assign(static_cast<std::size_t>(q), var);
    return b;
}

}  // namespace

TEST_CASE("per-stage cost closed forms") {
    SUBCASE("clamped empty belief costs almost nothing") {
        const BeliefState b = flat_belief(100, 1e-12, 1.0);
        const Allocation a = uniform_allocate(100, 10.0, 1);
        CHECK(per_stage_cost(b, a, 1.0) < 1e-9);
    }
    SUBCASE("single certain cell") {
        const BeliefState b = flat_belief(1, 1.0, 1.0);
        Allocation a = uniform_allocate(1, 1.0, 1);
        CHECK(per_stage_cost(b, a, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("uniform belief closed form") {
        const int q = 50;
        const double p0 = 0.02, c0 = 4.0, budget = 100.0;
        const BeliefState b = flat_belief(q, p0, 1.0 / c0);
        const Allocation a = uniform_allocate(q, budget, 1);
        const double expected = q * p0 / (c0 + budget / q);
        CHECK(per_stage_cost(b, a, 1.0) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("total cost honors the stage weights") {
    const std::vector<double> costs = {3.0, 5.0, 7.0};
    CHECK(total_cost(costs, {0.0, 0.0, 1.0}) == doctest::Approx(7.0));
    CHECK(total_cost(costs, {1.0, 0.0, 0.0}) == doctest::Approx(3.0));
    // additivity over a weight decomposition
    const double both = total_cost(costs, {0.5, 0.25, 1.0});
    const double a = total_cost(costs, {0.5, 0.0, 0.0});
    const double b = total_cost(costs, {0.0, 0.25, 1.0});
    CHECK(both == doctest::Approx(a + b).epsilon(1e-15));
    CHECK_THROWS_AS(total_cost(costs, {1.0}), std::invalid_argument);
}

TEST_CASE("uniform schedule cost matches the static closed form") {
    // static amplitudes, last-stage weighting: E[M_T] = p0 Q^2 / (Q c0 + T Lambda)
    ModelParams p = make_params(200, 6, 400.0);
    p.stay_prob = 1.0;
    p.amp_walk_std = 0.0;
    const CostEstimate est =
        estimate_policy_cost(p, KappaSchedule::uniform(6), 400, 2024, 2);
    const double c0 = p.noise_var / p.prior_var();
    const double expected = p.prior_prob * p.q * p.q / (p.q * c0 + 6.0 * 400.0);
    CHECK(std::abs(est.mean - expected) < 3.0 * est.std_error);
}

TEST_CASE("vanishing budget keeps the prior cost") {
    ModelParams p = make_params(100, 3, 1e-9);
    p.stay_prob = 1.0;
    p.amp_walk_std = 0.0;
    const CostEstimate est = estimate_policy_cost(p, KappaSchedule::uniform(3), 50, 7, 1);
    const double expected = p.q * p.prior_prob * p.prior_var() / p.noise_var;
    CHECK(est.mean == doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("cost estimation is reproducible for a fixed seed") {
    ModelParams p = make_params(100, 4, 200.0);
    const CostEstimate a = estimate_policy_cost(p, KappaSchedule::myopic(4), 1, 99, 1);
    const CostEstimate b = estimate_policy_cost(p, KappaSchedule::myopic(4), 1, 99, 1);
    CHECK(a.mean == b.mean);
    const CostEstimate c = estimate_policy_cost(p, KappaSchedule::myopic(4), 8, 99, 1);
    const CostEstimate d = estimate_policy_cost(p, KappaSchedule::myopic(4), 8, 99, 4);
    CHECK(c.mean == d.mean);  // thread count cannot change the estimate
}

TEST_CASE("offline rollout degenerate horizons") {
    SUBCASE("horizon T0+1 is the seeded schedule") {
        ModelParams p = make_params(50, 2, 100.0);
        const auto result = train_offline_rollout(p, {0.0}, default_kappa_grid(), 5, 1, 1);
        REQUIRE(result.schedules.size() == 1);
        CHECK(result.final_schedule().kappas == std::vector<double>{1.0, 0.0});
    }
    SUBCASE("singleton grid forces every searched coefficient") {
        ModelParams p = make_params(50, 5, 100.0);
        const auto result = train_offline_rollout(p, {0.0, 0.0}, {1.0}, 5, 1, 1);
        const auto& kappas = result.final_schedule().kappas;
        REQUIRE(kappas.size() == 5);
        CHECK(kappas[0] == 1.0);
        CHECK(kappas[1] == 1.0);
        CHECK(kappas[2] == 1.0);
        CHECK(kappas[3] == 0.0);
        CHECK(kappas[4] == 0.0);
    }
}

TEST_CASE("offline rollout is deterministic and respects the endpoint rules") {
    ModelParams p = make_params(100, 8, 1000.0);
    const auto a = train_offline_rollout(p, {0.0, 0.0}, default_kappa_grid(), 20, 5, 2);
    const auto b = train_offline_rollout(p, {0.0, 0.0}, default_kappa_grid(), 20, 5, 2);
    CHECK(a.final_schedule().kappas == b.final_schedule().kappas);
    CHECK(a.final_schedule().kappas.front() == 1.0);
    CHECK(a.final_schedule().kappas.back() == 0.0);
}

TEST_CASE("rollout coefficients trend downward in stage") {
    ModelParams p = make_params(1000, 20, 10000.0);  // 10 dB at q=1000
    const auto result = train_offline_rollout(p, std::vector<double>(5, 0.0),
                                              default_kappa_grid(), 100, 314, 2);
    const auto& kappas = result.final_schedule().kappas;
    REQUIRE(kappas.size() == 20);
    CHECK(kappas.front() == 1.0);
    CHECK(kappas.back() == 0.0);
    std::vector<double> stages, values;
    for (std::size_t t = 0; t < kappas.size(); ++t) {
        stages.push_back(static_cast<double>(t + 1));
        values.push_back(kappas[t]);
    }
    CHECK(rank_correlation(stages, values) <= 0.0);
}

TEST_CASE("myopic+ tolerance endpoints") {
    ModelParams p = make_params(200, 6, 2000.0);
    SUBCASE("huge tolerance keeps full exploration") {
        const auto result = train_myopic_plus(p, 1e9, default_kappa_grid(), 20, 11, 2);
        const auto& kappas = result.schedule.kappas;
        CHECK(kappas.front() == 1.0);
        CHECK(kappas.back() == 0.0);
        for (std::size_t t = 1; t + 1 < kappas.size(); ++t) CHECK(kappas[t] == 1.0);
    }
    SUBCASE("vanishing tolerance collapses to the myopic policy") {
        const auto result = train_myopic_plus(p, 1e-9, default_kappa_grid(), 20, 11, 2);
        const auto& kappas = result.schedule.kappas;
        for (std::size_t t = 1; t + 1 < kappas.size(); ++t) CHECK(kappas[t] <= 0.05);
    }
}

TEST_CASE("myopic+ reference cost is the per-grid minimum") {
    ModelParams p = make_params(200, 8, 2000.0);
    const auto result = train_myopic_plus(p, 0.1, default_kappa_grid(), 50, 17, 2);
    for (const auto& rec : result.records) {
        for (double b : rec.b_values) CHECK(rec.b_zero <= b * (1.0 + 1e-12));
    }
}

TEST_CASE("myopic+ replay: chosen coefficients satisfy the tolerance exactly") {
    ModelParams p = make_params(200, 10, 2000.0);
    const double rho = 0.1;
    const auto result = train_myopic_plus(p, rho, default_kappa_grid(), 50, 19, 2);
    REQUIRE(!result.records.empty());
    for (const auto& rec : result.records) {
        const double limit = (1.0 + rho) * rec.b_zero;
        bool found = false;
        for (std::size_t gi = 0; gi < rec.grid.size(); ++gi) {
            if (rec.grid[gi] == rec.chosen) {
                CHECK(rec.b_values[gi] <= limit);
                found = true;
            }
            if (rec.grid[gi] > rec.chosen) CHECK(rec.b_values[gi] > limit);
        }
        CHECK(found);
    }
}

TEST_CASE("myopic+ exploration decreases with SNR") {
    std::vector<double> snrs = {0.0, 5.0, 10.0, 15.0, 20.0};
    std::vector<double> mid_kappa;
    for (double snr : snrs) {
        ModelParams p = make_params(500, 10, 500.0 * std::pow(10.0, snr / 10.0));
        const auto result = train_myopic_plus(p, 0.1, default_kappa_grid(), 60, 23, 2);
        mid_kappa.push_back(result.schedule.kappas[5]);
    }
    CHECK(rank_correlation(snrs, mid_kappa) <= 0.0);
}

TEST_CASE("online rollout endpoint rules") {
    ModelParams p = make_params(50, 6, 100.0);
    BeliefState b = flat_belief(50, 0.02, 1.0 / 36.0, 1);
    Rng rng(29);
    CHECK(online_rollout_step(p, b, 1, {0.0}, default_kappa_grid(), 10, rng) == 1.0);
    b.stage = 6;
    CHECK(online_rollout_step(p, b, 6, {0.0}, default_kappa_grid(), 10, rng) == 0.0);
}

TEST_CASE("online rollout tracks offline rollout at desk scale") {
    // paired comparison: the 95% intervals of the two mean episode costs overlap
    ModelParams p = make_params(200, 10, 2000.0);  // 10 dB at q=200
    const int t0 = 2;
    const auto offline = train_offline_rollout(p, std::vector<double>(t0, 0.0),
                                               default_kappa_grid(), 60, 37, 2);
    const CostEstimate off_cost =
        estimate_policy_cost(p, offline.final_schedule(), 60, 4096, 2);

    const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
    const int trials = 60;
    double sum = 0.0, sumsq = 0.0;
    for (int j = 0; j < trials; ++j) {
        DarapTrialState state = init_trial(p, 4096, static_cast<std::uint64_t>(j));
        Rng policy_rng(derive_seed(4096, static_cast<std::uint64_t>(j), 2));
        for (int t = 1; t <= p.horizon; ++t) {
            const double kappa = online_rollout_step(
                p, state.belief, t, std::vector<double>(t0, 0.0), grid, 40, policy_rng);
            advance_stage(p, state, kappa, t < p.horizon);
        }
        const double cost = total_cost(state.stage_costs, p.stage_weights);
        sum += cost;
        sumsq += cost * cost;
    }
    const double mean = sum / trials;
    const double se = std::sqrt((sumsq / trials - mean * mean) / (trials - 1));
    CHECK(mean - 1.96 * se <= off_cost.mean + 1.96 * off_cost.std_error);
    CHECK(off_cost.mean - 1.96 * off_cost.std_error <= mean + 1.96 * se);
}
