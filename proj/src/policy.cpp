#include "darap/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "darap/parallel.hpp"

namespace darap {

KappaSchedule KappaSchedule::myopic(int horizon) {
    KappaSchedule s;
    s.kappas.assign(static_cast<std::size_t>(horizon), 0.0);
    s.provenance = Provenance::myopic;
    return s;
}

KappaSchedule KappaSchedule::uniform(int horizon) {
    KappaSchedule s;
    s.kappas.assign(static_cast<std::size_t>(horizon), 1.0);
    s.provenance = Provenance::uniform;
    return s;
}

std::string provenance_name(KappaSchedule::Provenance p) {
    switch (p) {
        case KappaSchedule::Provenance::manual: return "manual";
        case KappaSchedule::Provenance::myopic: return "myopic";
        case KappaSchedule::Provenance::uniform: return "uniform";
        case KappaSchedule::Provenance::offline_rollout: return "offline_rollout";
        case KappaSchedule::Provenance::myopic_plus: return "myopic_plus";
    }
    return "manual";
}

double per_stage_cost(const BeliefState& belief, const Allocation& alloc, double sigma2) {
    if (belief.stage != alloc.stage)
        throw std::invalid_argument("belief/allocation stage mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < belief.probs.size(); ++i)
        total += belief.probs[i] / (sigma2 / belief.vars[i] + alloc.effort[i]);
    return total;
}

double total_cost(const std::vector<double>& stage_costs, const std::vector<double>& gamma) {
    if (stage_costs.size() != gamma.size())
        throw std::invalid_argument("stage cost / weight length mismatch");
    double total = 0.0;
    for (std::size_t t = 0; t < gamma.size(); ++t) total += gamma[t] * stage_costs[t];
    return total;
}

std::vector<double> truncated_gamma(const ModelParams& params, int tau) {
    const auto& g = params.stage_weights;
    bool last_stage_only = true;
    for (std::size_t t = 0; t + 1 < g.size(); ++t)
        if (g[t] != 0.0) last_stage_only = false;
    std::vector<double> out(static_cast<std::size_t>(tau), 0.0);
    if (last_stage_only) {
        out.back() = 1.0;
        return out;
    }
    double sum = 0.0;
    for (int t = 0; t < tau; ++t) {
        out[static_cast<std::size_t>(t)] = g[static_cast<std::size_t>(t)];
        sum += out[static_cast<std::size_t>(t)];
    }
    if (sum > 0.0)
        for (auto& v : out) v /= sum;
    else
        out.back() = 1.0;
    return out;
}

DarapTrialState init_trial(const ModelParams& params, std::uint64_t root_seed,
                           std::uint64_t trial) {
    DarapTrialState s;
    s.rng_scene = Rng(derive_seed(root_seed, trial, 0));
    s.rng_noise = Rng(derive_seed(root_seed, trial, 1));
    s.scene = sample_initial_scene(params, s.rng_scene);
    s.belief = belief_init(params);
    s.t = 1;
    return s;
}

void advance_stage(const ModelParams& params, DarapTrialState& state, double kappa,
                   bool advance_world) {
    const double budget = params.budgets[static_cast<std::size_t>(state.t - 1)];
    const Allocation alloc = darap_allocate(state.belief, budget, kappa, params.noise_var);
    state.stage_costs.push_back(per_stage_cost(state.belief, alloc, params.noise_var));
    const Observation obs = observe(params, state.scene, alloc, state.rng_noise);
    state.belief = belief_update(params, state.belief, obs);
    if (advance_world) {
        state.belief = belief_predict(params, state.belief);
        state.scene = step_scene(params, state.scene, state.rng_scene);
    }
    ++state.t;
}

CostEstimate estimate_policy_cost(const ModelParams& params, const KappaSchedule& schedule,
                                  int num_trials, std::uint64_t seed, int threads) {
    if (num_trials < 1) throw std::invalid_argument("num_trials must be >= 1");
    if (schedule.kappas.size() != static_cast<std::size_t>(params.horizon))
        throw std::invalid_argument("schedule length must match horizon");
    std::vector<double> costs(static_cast<std::size_t>(num_trials), 0.0);
    parallel_for(num_trials, threads, [&](int j) {
        DarapTrialState state = init_trial(params, seed, static_cast<std::uint64_t>(j));
        for (int t = 1; t <= params.horizon; ++t)
            advance_stage(params, state, schedule.kappas[static_cast<std::size_t>(t - 1)],
                          t < params.horizon);
        costs[static_cast<std::size_t>(j)] = total_cost(state.stage_costs, params.stage_weights);
    });
    CostEstimate est;
    est.num_trials = num_trials;
    double sum = 0.0;
    for (double c : costs) sum += c;
    est.mean = sum / static_cast<double>(num_trials);
    double ss = 0.0;
    for (double c : costs) ss += (c - est.mean) * (c - est.mean);
    est.std_error = num_trials > 1
                        ? std::sqrt(ss / (static_cast<double>(num_trials) *
                                          static_cast<double>(num_trials - 1)))
                        : 0.0;
    return est;
}

namespace {

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("kappa grid must not be empty");
    for (double k : grid)
        if (k < 0.0 || k > 1.0)
            throw std::invalid_argument("kappa grid values must lie in [0,1]");
}

}  // namespace

OfflineRolloutResult train_offline_rollout(const ModelParams& params,
                                           const std::vector<double>& base_tail,
                                           const std::vector<double>& kappa_grid,
                                           int num_mc, std::uint64_t seed, int threads) {
    check_grid(kappa_grid);
    if (base_tail.empty()) throw std::invalid_argument("base tail must have T0 >= 1 stages");
    if (num_mc < 1) throw std::invalid_argument("num_mc must be >= 1");
    const int t0 = static_cast<int>(base_tail.size());
    const int horizon = params.horizon;
    if (horizon < t0 + 1)
        throw std::invalid_argument("horizon must exceed the base tail length");

    std::vector<double> grid = kappa_grid;
    std::sort(grid.begin(), grid.end());

    OfflineRolloutResult result;
    std::vector<double> omega = {1.0};

    auto emit = [&] {
        KappaSchedule s;
        s.kappas = omega;
        s.kappas.insert(s.kappas.end(), base_tail.begin(), base_tail.end());
        s.provenance = KappaSchedule::Provenance::offline_rollout;
        s.base_length = t0;
        result.schedules.push_back(std::move(s));
    };
    emit();  // kappa(T0+1) = {omega(1), phi(T0)}

    // Persistent per-trial states hold the common prefix; each iteration only
    // simulates the searched stage plus the base tail.
    std::vector<DarapTrialState> trials;
    trials.reserve(static_cast<std::size_t>(num_mc));
    for (int j = 0; j < num_mc; ++j)
        trials.push_back(init_trial(params, seed, static_cast<std::uint64_t>(j)));
    // Stage 1 always runs with omega(1) = 1; searches start at stage 2.
    parallel_for(num_mc, threads, [&](int j) {
        advance_stage(params, trials[static_cast<std::size_t>(j)], 1.0, true);
    });

    for (int tau = t0 + 2; tau <= horizon; ++tau) {
        const std::vector<double> gamma_tau = truncated_gamma(params, tau);
        std::vector<double> totals(grid.size(), 0.0);
        std::vector<std::vector<double>> per_trial(static_cast<std::size_t>(num_mc));
        parallel_for(num_mc, threads, [&](int j) {
            auto& costs = per_trial[static_cast<std::size_t>(j)];
            costs.assign(grid.size(), 0.0);
            for (std::size_t gi = 0; gi < grid.size(); ++gi) {
                DarapTrialState branch = trials[static_cast<std::size_t>(j)];
                advance_stage(params, branch, grid[gi], true);
                for (int t = 0; t < t0; ++t)
                    advance_stage(params, branch, base_tail[static_cast<std::size_t>(t)],
                                  branch.t < tau);
                costs[gi] = total_cost(branch.stage_costs, gamma_tau);
            }
        });
        for (int j = 0; j < num_mc; ++j)
            for (std::size_t gi = 0; gi < grid.size(); ++gi)
                totals[gi] += per_trial[static_cast<std::size_t>(j)][gi];

        std::size_t best = 0;
        for (std::size_t gi = 1; gi < grid.size(); ++gi)
            if (totals[gi] < totals[best]) best = gi;
        const double chosen = grid[best];
        omega.push_back(chosen);

        parallel_for(num_mc, threads, [&](int j) {
            advance_stage(params, trials[static_cast<std::size_t>(j)], chosen, true);
        });
        emit();
    }
    return result;
}

MyopicPlusResult train_myopic_plus(const ModelParams& params, double rho,
                                   const std::vector<double>& kappa_grid, int num_mc,
                                   std::uint64_t seed, int threads) {
    check_grid(kappa_grid);
    if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
    if (num_mc < 1) throw std::invalid_argument("num_mc must be >= 1");
    const int horizon = params.horizon;

    std::vector<double> grid = kappa_grid;
    std::sort(grid.begin(), grid.end());

    MyopicPlusResult result;
    result.schedule.provenance = KappaSchedule::Provenance::myopic_plus;
    result.schedule.rho = rho;
    result.schedule.kappas = {1.0};
    if (horizon == 1) {
        result.schedule.kappas = {0.0};
        return result;
    }

    std::vector<DarapTrialState> trials;
    trials.reserve(static_cast<std::size_t>(num_mc));
    for (int j = 0; j < num_mc; ++j)
        trials.push_back(init_trial(params, seed, static_cast<std::uint64_t>(j)));
    parallel_for(num_mc, threads, [&](int j) {
        advance_stage(params, trials[static_cast<std::size_t>(j)], 1.0, true);
    });

    for (int tau = 2; tau <= horizon - 1; ++tau) {
        const double budget = params.budgets[static_cast<std::size_t>(tau - 1)];
        std::vector<std::vector<double>> per_trial(static_cast<std::size_t>(num_mc));
        std::vector<double> per_trial_zero(static_cast<std::size_t>(num_mc), 0.0);
        parallel_for(num_mc, threads, [&](int j) {
            const auto& state = trials[static_cast<std::size_t>(j)];
            const Allocation myopic =
                myopic_allocate(state.belief, budget, params.noise_var);
            per_trial_zero[static_cast<std::size_t>(j)] =
                per_stage_cost(state.belief, myopic, params.noise_var);
            auto& row = per_trial[static_cast<std::size_t>(j)];
            row.assign(grid.size(), 0.0);
            const double share = budget / static_cast<double>(params.q);
            Allocation blend = myopic;
            for (std::size_t gi = 0; gi < grid.size(); ++gi) {
                const double kappa = grid[gi];
                for (std::size_t i = 0; i < blend.effort.size(); ++i)
                    blend.effort[i] = kappa * share + (1.0 - kappa) * myopic.effort[i];
                row[gi] = per_stage_cost(state.belief, blend, params.noise_var);
            }
        });

        MyopicPlusStageRecord record;
        record.stage = tau;
        record.grid = grid;
        record.b_values.assign(grid.size(), 0.0);
        for (int j = 0; j < num_mc; ++j) {
            record.b_zero += per_trial_zero[static_cast<std::size_t>(j)];
            for (std::size_t gi = 0; gi < grid.size(); ++gi)
                record.b_values[gi] += per_trial[static_cast<std::size_t>(j)][gi];
        }
        record.b_zero /= static_cast<double>(num_mc);
        for (auto& v : record.b_values) v /= static_cast<double>(num_mc);

        const double limit = (1.0 + rho) * record.b_zero;
        double chosen = grid.front();  // smallest grid point if nothing qualifies
        for (std::size_t gi = grid.size(); gi-- > 0;) {
            if (record.b_values[gi] <= limit) {
                chosen = grid[gi];
                break;
            }
        }
        record.chosen = chosen;
        result.records.push_back(std::move(record));
        result.schedule.kappas.push_back(chosen);

        parallel_for(num_mc, threads, [&](int j) {
            advance_stage(params, trials[static_cast<std::size_t>(j)], chosen, true);
        });
    }
    result.schedule.kappas.push_back(0.0);
    return result;
}

namespace {

SceneState sample_scene_from_belief(const ModelParams& params, const BeliefState& belief,
                                    int stage, Rng& rng) {
    SceneState scene;
    scene.stage = stage;
    std::vector<int> kept;
    for (int i = 0; i < params.q; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (rng.uniform() <= belief.probs[ui] &&
            !neighborhood_conflict(params, kept, i)) {
            kept.push_back(i);
            scene.targets.push_back(
                {i, rng.normal(belief.means[ui], std::sqrt(belief.vars[ui]))});
        }
    }
    return scene;
}

}  // namespace

double online_rollout_step(const ModelParams& params, const BeliefState& belief,
                           int current_stage, const std::vector<double>& base_tail,
                           const std::vector<double>& kappa_grid, int num_mc, Rng& rng) {
    if (current_stage == 1) return 1.0;
    if (current_stage >= params.horizon) return 0.0;
    check_grid(kappa_grid);
    if (num_mc < 1) throw std::invalid_argument("num_mc must be >= 1");

    std::vector<double> grid = kappa_grid;
    std::sort(grid.begin(), grid.end());
    const int horizon = params.horizon;
    const int t0 = static_cast<int>(base_tail.size());

    // Tail coefficients for stages current_stage+1 .. T: the base policy
    // pins the last T0 stages, anything before it runs myopically.
    auto tail_kappa = [&](int stage) {
        const int from_end = horizon - stage;  // 0 for the final stage
        if (from_end < t0) return base_tail[static_cast<std::size_t>(t0 - 1 - from_end)];
        return 0.0;
    };

    std::vector<double> totals(grid.size(), 0.0);
    for (int mc = 0; mc < num_mc; ++mc) {
        const std::uint64_t trial_seed = rng.engine()();
        Rng scene_rng(derive_seed(trial_seed, 0));
        const SceneState scene0 =
            sample_scene_from_belief(params, belief, current_stage, scene_rng);
        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            DarapTrialState branch;
            branch.scene = scene0;
            branch.belief = belief;
            branch.rng_scene = Rng(derive_seed(trial_seed, 1));
            branch.rng_noise = Rng(derive_seed(trial_seed, 2));
            branch.t = current_stage;
            advance_stage(params, branch, grid[gi], true);
            for (int s = current_stage + 1; s <= horizon; ++s)
                advance_stage(params, branch, tail_kappa(s), s < horizon);
            double cost = 0.0;
            for (int s = current_stage; s <= horizon; ++s)
                cost += params.stage_weights[static_cast<std::size_t>(s - 1)] *
                        branch.stage_costs[static_cast<std::size_t>(s - current_stage)];
            totals[gi] += cost;
        }
    }
    std::size_t best = 0;
    for (std::size_t gi = 1; gi < grid.size(); ++gi)
        if (totals[gi] < totals[best]) best = gi;
    return grid[best];
}

std::vector<double> default_kappa_grid() {
    std::vector<double> grid;
    grid.reserve(21);
    for (int i = 0; i <= 20; ++i) grid.push_back(static_cast<double>(i) / 20.0);
    return grid;
}

}  // namespace darap
