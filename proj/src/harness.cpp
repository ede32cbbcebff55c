#include "darap/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "darap/belief.hpp"
#include "darap/parallel.hpp"

namespace darap {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string policy_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::uniform: return "uniform";
        case PolicyKind::myopic: return "myopic";
        case PolicyKind::darap: return "darap";
        case PolicyKind::offline_rollout: return "offline_rollout";
        case PolicyKind::myopic_plus: return "myopic_plus";
        case PolicyKind::online_rollout: return "online_rollout";
        case PolicyKind::omniscient: return "omniscient";
        case PolicyKind::semi_omniscient: return "semi_omniscient";
    }
    return "uniform";
}

PolicyKind policy_from_name(const std::string& name) {
    if (name == "uniform") return PolicyKind::uniform;
    if (name == "myopic") return PolicyKind::myopic;
    if (name == "darap") return PolicyKind::darap;
    if (name == "offline_rollout") return PolicyKind::offline_rollout;
    if (name == "myopic_plus") return PolicyKind::myopic_plus;
    if (name == "online_rollout") return PolicyKind::online_rollout;
    if (name == "omniscient") return PolicyKind::omniscient;
    if (name == "semi_omniscient") return PolicyKind::semi_omniscient;
    throw config_error("policy: unknown policy '" + name + "'");
}

std::string scenario_name(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::standard: return "standard";
        case ScenarioKind::mismatch: return "mismatch";
        case ScenarioKind::missing: return "missing";
    }
    return "standard";
}

ScenarioKind scenario_from_name(const std::string& name) {
    if (name == "standard") return ScenarioKind::standard;
    if (name == "mismatch") return ScenarioKind::mismatch;
    if (name == "missing") return ScenarioKind::missing;
    throw config_error("scenario: unknown scenario '" + name + "'");
}

double snr_to_budget(double snr_db, int q, double sigma2) {
    return static_cast<double>(q) * sigma2 * std::pow(10.0, snr_db / 10.0);
}

double budget_to_snr(double budget, int q, double sigma2) {
    return 10.0 * std::log10(budget / (static_cast<double>(q) * sigma2));
}

namespace {

std::vector<std::vector<std::uint8_t>> missing_mask(int horizon, int q, int on_stages,
                                                    int off_stages) {
    if (on_stages <= 0 || off_stages < 0)
        throw config_error("scenario: missing-data pattern needs on >= 1, off >= 0");
    std::vector<std::vector<std::uint8_t>> mask(
        static_cast<std::size_t>(horizon),
        std::vector<std::uint8_t>(static_cast<std::size_t>(q), 1));
    const int cycle = on_stages + off_stages;
    for (int t = 1; t <= horizon; ++t) {
        const int phase = (t - 1) % cycle;
        if (phase >= on_stages)
            std::fill(mask[static_cast<std::size_t>(t - 1)].begin(),
                      mask[static_cast<std::size_t>(t - 1)].end(), 0);
    }
    return mask;
}

ModelParams training_params(const ScenarioConfig& config) {
    // Schedules are trained on the fully observable standard model; the
    // scenario perturbations are evaluation-time conditions.
    ModelParams p = config.params;
    p.observability.clear();
    return p;
}

void train_schedule(ScenarioConfig& config) {
    PolicySpec& spec = config.policy;
    const std::vector<double> grid =
        spec.kappa_grid.empty() ? default_kappa_grid() : spec.kappa_grid;
    const std::uint64_t train_seed = derive_seed(config.seed, 0x7261696eULL);
    if (spec.kind == PolicyKind::offline_rollout) {
        const std::vector<double> base(static_cast<std::size_t>(spec.t0), 0.0);
        spec.schedule = train_offline_rollout(training_params(config), base, grid,
                                              spec.train_mc, train_seed, config.threads)
                            .final_schedule();
        spec.has_schedule = true;
    } else if (spec.kind == PolicyKind::myopic_plus) {
        spec.schedule = train_myopic_plus(training_params(config), spec.rho, grid,
                                          spec.train_mc, train_seed, config.threads)
                            .schedule;
        spec.has_schedule = true;
    }
}

}  // namespace

void resolve_config(ScenarioConfig& config) {
    ModelParams& p = config.params;
    if (config.trials < 1) throw config_error("trials must be >= 1");
    if (p.budgets.empty()) {
        if (config.explicit_budgets) throw config_error("budgets: empty budget list");
        p.budgets.assign(static_cast<std::size_t>(p.horizon),
                         snr_to_budget(config.snr_db, p.q, p.noise_var));
    } else {
        config.snr_db = budget_to_snr(p.budgets.front(), p.q, p.noise_var);
    }
    if (p.stage_weights.empty()) {
        p.stage_weights.assign(static_cast<std::size_t>(p.horizon), 0.0);
        p.stage_weights.back() = 1.0;
    }
    if (config.scenario.kind == ScenarioKind::missing) {
        p.observability = missing_mask(p.horizon, p.q, config.scenario.on_stages,
                                       config.scenario.off_stages);
    }
    if (config.scenario.kind == ScenarioKind::mismatch && !(config.scenario.theta0 > 0.0))
        throw config_error("scenario.theta0 must be positive");
    p.validate();

    PolicySpec& spec = config.policy;
    switch (spec.kind) {
        case PolicyKind::uniform:
            spec.schedule = KappaSchedule::uniform(p.horizon);
            spec.has_schedule = true;
            break;
        case PolicyKind::myopic:
            spec.schedule = KappaSchedule::myopic(p.horizon);
            spec.has_schedule = true;
            break;
        case PolicyKind::darap:
            if (!spec.has_schedule)
                throw config_error("policy.darap requires an explicit kappa schedule");
            break;
        case PolicyKind::offline_rollout:
        case PolicyKind::myopic_plus:
            if (!spec.has_schedule) train_schedule(config);
            break;
        default:
            break;
    }
    if (spec.has_schedule &&
        spec.schedule.kappas.size() != static_cast<std::size_t>(p.horizon))
        throw config_error("policy.schedule length must match model.horizon");
}

namespace {

struct TrialRuntime {
    SceneState scene;
    BeliefState belief;          // Bayes filter, predicted flavor
    std::optional<OracleFilter> oracle;
    Rng rng_scene;
    Rng rng_noise;
    Rng rng_policy;
};

void apply_mismatch(const ScenarioConfig& config, SceneState& scene) {
    if (config.scenario.kind != ScenarioKind::mismatch) return;
    for (auto& t : scene.targets) t.amplitude = config.scenario.theta0;
}

bool uses_oracle(PolicyKind kind) {
    return kind == PolicyKind::omniscient || kind == PolicyKind::semi_omniscient;
}

}  // namespace

EpisodeMetrics run_episode(const ScenarioConfig& config, int trial) {
    const ModelParams& p = config.params;
    const PolicySpec& spec = config.policy;
    const int horizon = p.horizon;

    TrialRuntime rt;
    rt.rng_scene = Rng(derive_seed(config.seed, static_cast<std::uint64_t>(trial), 0));
    rt.rng_noise = Rng(derive_seed(config.seed, static_cast<std::uint64_t>(trial), 1));
    rt.rng_policy = Rng(derive_seed(config.seed, static_cast<std::uint64_t>(trial), 2));
    rt.scene = sample_initial_scene(p, rt.rng_scene);
    apply_mismatch(config, rt.scene);
    rt.belief = belief_init(p);
    if (uses_oracle(spec.kind))
        rt.oracle.emplace(p, spec.kind == PolicyKind::omniscient
                                 ? OracleMode::omniscient
                                 : OracleMode::semi_omniscient);

    EpisodeMetrics m;
    m.sq_err_sum.assign(static_cast<std::size_t>(horizon), 0.0);
    m.target_count.assign(static_cast<std::size_t>(horizon), 0);
    m.stage_cost.assign(static_cast<std::size_t>(horizon), 0.0);
    if (config.collect_detection) {
        m.target_scores.resize(static_cast<std::size_t>(horizon));
        m.nontarget_scores.resize(static_cast<std::size_t>(horizon));
    }

    std::vector<int> prev_positions;
    const std::vector<double> online_base(static_cast<std::size_t>(spec.t0), 0.0);
    const std::vector<double> online_grid =
        spec.kappa_grid.empty() ? default_kappa_grid() : spec.kappa_grid;

    for (int t = 1; t <= horizon; ++t) {
        const auto ut = static_cast<std::size_t>(t - 1);
        const double budget = p.budgets[ut];

        // planning belief and allocation
        BeliefState planning;
        Allocation alloc;
        switch (spec.kind) {
            case PolicyKind::uniform:
                planning = rt.belief;
                alloc = uniform_allocate(p.q, budget, t);
                break;
            case PolicyKind::omniscient:
                planning = rt.oracle->planning_belief(rt.scene.positions(), prev_positions);
                alloc = omniscient_allocate(rt.scene, budget, p.q);
                break;
            case PolicyKind::semi_omniscient:
                planning = rt.oracle->planning_belief(rt.scene.positions(), prev_positions);
                alloc = semi_omniscient_allocate(planning, budget, p.noise_var);
                break;
            case PolicyKind::online_rollout: {
                planning = rt.belief;
                const double kappa = online_rollout_step(p, rt.belief, t, online_base,
                                                         online_grid, spec.online_mc,
                                                         rt.rng_policy);
                alloc = darap_allocate(rt.belief, budget, kappa, p.noise_var);
                break;
            }
            default: {
                planning = rt.belief;
                const double kappa = spec.schedule.kappas[ut];
                alloc = darap_allocate(rt.belief, budget, kappa, p.noise_var);
                break;
            }
        }
        m.stage_cost[ut] = per_stage_cost(planning, alloc, p.noise_var);

        const Observation obs = observe(p, rt.scene, alloc, rt.rng_noise);
        const bool oracle_run = uses_oracle(spec.kind);
        BeliefState updated;
        if (oracle_run) {
            rt.oracle->update(obs);
        } else {
            updated = belief_update(p, rt.belief, obs);
        }

        // amplitude error over the true targets
        const std::vector<double>& est_means =
            oracle_run ? rt.oracle->means() : updated.means;
        for (const auto& target : rt.scene.targets) {
            const double err =
                target.amplitude - est_means[static_cast<std::size_t>(target.cell)];
            m.sq_err_sum[ut] += err * err;
            ++m.target_count[ut];
        }

        if (config.collect_detection) {
            const std::vector<double>& scores = oracle_run ? planning.probs : updated.probs;
            const auto occ = rt.scene.occupancy(p.q);
            auto& ts = m.target_scores[ut];
            auto& ns = m.nontarget_scores[ut];
            ts.reserve(rt.scene.targets.size());
            ns.reserve(static_cast<std::size_t>(p.q) - rt.scene.targets.size());
            for (int i = 0; i < p.q; ++i) {
                const float s = static_cast<float>(scores[static_cast<std::size_t>(i)]);
                if (occ[static_cast<std::size_t>(i)])
                    ts.push_back(s);
                else
                    ns.push_back(s);
            }
        }

        if (t < horizon) {
            if (oracle_run) {
                rt.oracle->predict(rt.scene.positions());
            } else {
                rt.belief = belief_predict(p, updated);
            }
            prev_positions = rt.scene.positions();
            rt.scene = step_scene(p, rt.scene, rt.rng_scene);
            apply_mismatch(config, rt.scene);
        }
    }

    m.total_cost = total_cost(m.stage_cost, p.stage_weights);
    double weighted = 0.0;
    double weight_sum = 0.0;
    bool valid = true;
    for (int t = 0; t < horizon; ++t) {
        const double g = p.stage_weights[static_cast<std::size_t>(t)];
        if (g == 0.0) continue;
        weight_sum += g;
        if (m.target_count[static_cast<std::size_t>(t)] == 0) {
            valid = false;
            break;
        }
        weighted += g * m.sq_err_sum[static_cast<std::size_t>(t)] /
                    static_cast<double>(m.target_count[static_cast<std::size_t>(t)]);
    }
    m.weighted_mse_valid = valid && weight_sum > 0.0;
    m.weighted_mse = m.weighted_mse_valid ? weighted / weight_sum : kNan;
    return m;
}

namespace {

double pd_at_pfa(std::vector<float>& fa, const std::vector<float>& hits, double pfa) {
    if (fa.empty() || hits.empty()) return kNan;
    std::sort(fa.begin(), fa.end(), std::greater<float>());
    const auto k = static_cast<std::size_t>(pfa * static_cast<double>(fa.size()));
    const float threshold = fa[std::min(k, fa.size() - 1)];
    std::size_t detected = 0;
    for (float h : hits)
        if (h > threshold) ++detected;
    return static_cast<double>(detected) / static_cast<double>(hits.size());
}

void mean_se(const std::vector<double>& values, double& mean, double& se) {
    double sum = 0.0;
    long n = 0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        sum += v;
        ++n;
    }
    mean = n > 0 ? sum / static_cast<double>(n) : kNan;
    double ss = 0.0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        ss += (v - mean) * (v - mean);
    }
    se = n > 1 ? std::sqrt(ss / (static_cast<double>(n) * static_cast<double>(n - 1)))
               : 0.0;
}

}  // namespace

PolicyResult aggregate_trials(const ScenarioConfig& config,
                              const std::vector<EpisodeMetrics>& trials,
                              const std::string& name) {
    const int horizon = config.params.horizon;
    PolicyResult r;
    r.name = name;
    r.per_trial_mse.reserve(trials.size());
    r.per_trial_cost.reserve(trials.size());
    r.stage_mse.assign(static_cast<std::size_t>(horizon), kNan);
    r.stage_cost.assign(static_cast<std::size_t>(horizon), 0.0);

    std::vector<double> sq(static_cast<std::size_t>(horizon), 0.0);
    std::vector<long> counts(static_cast<std::size_t>(horizon), 0);
    for (const auto& m : trials) {
        r.per_trial_mse.push_back(m.weighted_mse);
        r.per_trial_cost.push_back(m.total_cost);
        for (int t = 0; t < horizon; ++t) {
            const auto ut = static_cast<std::size_t>(t);
            sq[ut] += m.sq_err_sum[ut];
            counts[ut] += m.target_count[ut];
            r.stage_cost[ut] += m.stage_cost[ut] / static_cast<double>(trials.size());
        }
    }
    for (int t = 0; t < horizon; ++t) {
        const auto ut = static_cast<std::size_t>(t);
        if (counts[ut] > 0) r.stage_mse[ut] = sq[ut] / static_cast<double>(counts[ut]);
    }
    mean_se(r.per_trial_mse, r.mse_mean, r.mse_se);
    mean_se(r.per_trial_cost, r.cost_mean, r.cost_se);

    if (config.collect_detection) {
        r.pd.assign(static_cast<std::size_t>(horizon), kNan);
        for (int t = 0; t < horizon; ++t) {
            const auto ut = static_cast<std::size_t>(t);
            std::vector<float> fa;
            std::vector<float> hits;
            for (const auto& m : trials) {
                if (m.nontarget_scores.empty()) continue;
                fa.insert(fa.end(), m.nontarget_scores[ut].begin(),
                          m.nontarget_scores[ut].end());
                hits.insert(hits.end(), m.target_scores[ut].begin(),
                            m.target_scores[ut].end());
            }
            r.pd[ut] = pd_at_pfa(fa, hits, config.pfa);
        }
    }
    return r;
}

namespace {

std::vector<EpisodeMetrics> run_all_trials(const ScenarioConfig& config) {
    std::vector<EpisodeMetrics> metrics(static_cast<std::size_t>(config.trials));
    parallel_for(config.trials, config.threads,
                 [&](int j) { metrics[static_cast<std::size_t>(j)] = run_episode(config, j); });
    return metrics;
}

double paired_gain_se_db(const std::vector<double>& u, const std::vector<double>& p) {
    double su = 0.0, sp = 0.0;
    long n = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (std::isnan(u[j]) || std::isnan(p[j])) continue;
        su += u[j];
        sp += p[j];
        ++n;
    }
    if (n < 2) return kNan;
    const double mu = su / static_cast<double>(n);
    const double mp = sp / static_cast<double>(n);
    double vu = 0.0, vp = 0.0, cov = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (std::isnan(u[j]) || std::isnan(p[j])) continue;
        vu += (u[j] - mu) * (u[j] - mu);
        vp += (p[j] - mp) * (p[j] - mp);
        cov += (u[j] - mu) * (p[j] - mp);
    }
    const double nn = static_cast<double>(n) * static_cast<double>(n - 1);
    vu /= nn;
    vp /= nn;
    cov /= nn;
    const double scale = 10.0 / std::log(10.0);
    const double var =
        scale * scale * (vu / (mu * mu) + vp / (mp * mp) - 2.0 * cov / (mu * mp));
    return var > 0.0 ? std::sqrt(var) : 0.0;
}

}  // namespace

EvaluationReport evaluate(const ScenarioConfig& config_in) {
    ScenarioConfig config = config_in;
    resolve_config(config);

    EvaluationReport report;
    report.trials = config.trials;
    report.seed = config.seed;
    report.pfa = config.pfa;

    const auto t0 = std::chrono::steady_clock::now();
    const auto policy_metrics = run_all_trials(config);
    const auto t1 = std::chrono::steady_clock::now();
    report.policy = aggregate_trials(config, policy_metrics, policy_name(config.policy.kind));
    report.policy.wall_seconds = std::chrono::duration<double>(t1 - t0).count();

    ScenarioConfig uniform_config = config;
    uniform_config.policy = PolicySpec{};
    uniform_config.policy.kind = PolicyKind::uniform;
    resolve_config(uniform_config);
    const auto t2 = std::chrono::steady_clock::now();
    const auto uniform_metrics = run_all_trials(uniform_config);
    const auto t3 = std::chrono::steady_clock::now();
    report.uniform = aggregate_trials(uniform_config, uniform_metrics, "uniform");
    report.uniform.wall_seconds = std::chrono::duration<double>(t3 - t2).count();

    report.mse_gain_db = 10.0 * std::log10(report.uniform.mse_mean / report.policy.mse_mean);
    report.mse_gain_se_db =
        paired_gain_se_db(report.uniform.per_trial_mse, report.policy.per_trial_mse);
    report.cost_gain_db =
        10.0 * std::log10(report.uniform.cost_mean / report.policy.cost_mean);
    return report;
}

}  // namespace darap
