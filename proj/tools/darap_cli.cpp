#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "darap/bounds.hpp"
#include "darap/config_io.hpp"
#include "darap/harness.hpp"

namespace fs = std::filesystem;
using namespace darap;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir = ".";
    double snr_db = 10.0;
    bool snr_set = false;
    int trials = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool threads_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_snr = true) {
    cmd->add_option("--config", flags.config_path, "configuration file (TOML or JSON)");
    cmd->add_option("--out", flags.out_dir, "output directory");
    if (with_snr)
        cmd->add_option("--snr-db", flags.snr_db, "per-stage SNR in dB")
            ->each([&](const std::string&) { flags.snr_set = true; });
    cmd->add_option("--trials", flags.trials, "number of Monte Carlo trials");
    cmd->add_option("--seed", flags.seed, "root random seed")
        ->each([&](const std::string&) { flags.seed_set = true; });
    cmd->add_option("--threads", flags.threads, "worker threads (0 = all cores)")
        ->each([&](const std::string&) { flags.threads_set = true; });
}

ScenarioConfig base_config(const CommonFlags& flags) {
    ScenarioConfig config;
    if (!flags.config_path.empty()) config = load_config(flags.config_path);
    if (flags.snr_set) {
        config.snr_db = flags.snr_db;
        config.params.budgets.clear();
        config.explicit_budgets = false;
    }
    if (flags.trials > 0) config.trials = flags.trials;
    if (flags.seed_set) config.seed = flags.seed;
    if (flags.threads_set) config.threads = flags.threads;
    return config;
}

fs::path prepare_out_dir(const std::string& dir) {
    fs::path p(dir);
    if (!p.empty()) fs::create_directories(p);
    return p;
}

std::vector<double> parse_range(const std::string& text) {
    // "a:b:step" inclusive range, or a comma-separated list, or one value.
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double a = 0.0, b = 0.0, step = 1.0;
        char c1 = 0, c2 = 0;
        std::istringstream in(text);
        if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' ||
            !(step > 0.0))
            throw config_error("range: expected start:stop:step, got '" + text + "'");
        for (double v = a; v <= b + 1e-9 * step; v += step) out.push_back(v);
        return out;
    }
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw config_error("range: no values in '" + text + "'");
    return out;
}

int cmd_train(const CommonFlags& flags, const std::string& method, int t0, double rho,
              int num_mc) {
    ScenarioConfig config = base_config(flags);
    config.policy.kind = policy_from_name(method);
    if (config.policy.kind != PolicyKind::offline_rollout &&
        config.policy.kind != PolicyKind::myopic_plus)
        throw config_error("train: method must be offline_rollout or myopic_plus");
    config.policy.t0 = t0;
    config.policy.rho = rho;
    if (num_mc > 0) config.policy.train_mc = num_mc;
    config.policy.has_schedule = false;

    ModelParams params = config.params;
    if (params.budgets.empty())
        params.budgets.assign(static_cast<std::size_t>(params.horizon),
                              snr_to_budget(config.snr_db, params.q, params.noise_var));
    if (params.stage_weights.empty()) {
        params.stage_weights.assign(static_cast<std::size_t>(params.horizon), 0.0);
        params.stage_weights.back() = 1.0;
    }
    params.observability.clear();
    params.validate();

    const std::vector<double> grid =
        config.policy.kappa_grid.empty() ? default_kappa_grid() : config.policy.kappa_grid;
    const fs::path out = prepare_out_dir(flags.out_dir) / "schedule.json";
    if (config.policy.kind == PolicyKind::offline_rollout) {
        const std::vector<double> base(static_cast<std::size_t>(t0), 0.0);
        const auto result = train_offline_rollout(params, base, grid,
                                                  config.policy.train_mc, config.seed,
                                                  config.threads);
        save_schedule(out.string(), result.final_schedule(), config.snr_db, config.seed);
    } else {
        const auto result = train_myopic_plus(params, rho, grid, config.policy.train_mc,
                                              config.seed, config.threads);
        save_schedule_with_records(out.string(), result, config.snr_db, config.seed);
    }
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_run(const CommonFlags& flags, const std::string& policy,
            const std::string& scenario, double theta0, const std::string& schedule_path) {
    ScenarioConfig config = base_config(flags);
    if (!policy.empty()) {
        config.policy.kind = policy_from_name(policy);
        config.policy.has_schedule = false;
        config.policy.schedule = KappaSchedule{};
    }
    if (!scenario.empty()) config.scenario.kind = scenario_from_name(scenario);
    if (theta0 > 0.0) config.scenario.theta0 = theta0;
    if (!schedule_path.empty()) {
        config.policy.schedule = load_schedule(schedule_path);
        config.policy.has_schedule = true;
    }

    const EvaluationReport report = evaluate(config);
    ScenarioConfig resolved = config;
    resolve_config(resolved);
    const fs::path out = prepare_out_dir(flags.out_dir);
    write_metrics_json((out / "metrics.json").string(), resolved, report);
    write_per_stage_csv((out / "per_stage.csv").string(), report);
    std::cout << "policy " << report.policy.name << ": weighted MSE "
              << format_double(report.policy.mse_mean) << " (uniform "
              << format_double(report.uniform.mse_mean) << "), gain "
              << format_double(report.mse_gain_db) << " dB\n";
    std::cout << "wrote " << (out / "metrics.json").string() << ", "
              << (out / "per_stage.csv").string() << "\n";
    return 0;
}

int cmd_bounds(const CommonFlags& flags, const std::string& snr_range) {
    ScenarioConfig config = base_config(flags);
    const std::vector<double> snrs =
        parse_range(snr_range.empty() ? "0:30:1" : snr_range);
    std::ostringstream out;
    out << "snr_db,omniscient_bound,semi_bound,semi_condition,combined\n";
    for (double snr : snrs) {
        ModelParams params = config.params;
        params.budgets.assign(static_cast<std::size_t>(params.horizon),
                              snr_to_budget(snr, params.q, params.noise_var));
        const BoundInputs in = BoundInputs::from_params(params);
        const CombinedBound combined = combined_bound(in);
        out << format_double(snr) << ',' << format_double(combined.omniscient) << ','
            << format_double(combined.semi) << ',' << (combined.semi_condition_ok ? 1 : 0)
            << ',' << format_double(combined.bound) << '\n';
    }
    const fs::path path = prepare_out_dir(flags.out_dir) / "bounds.csv";
    std::ofstream file(path);
    if (!file) throw config_error("cannot write file: " + path.string());
    file << out.str();
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& param,
              const std::string& values, const std::string& policy) {
    ScenarioConfig config = base_config(flags);
    if (!policy.empty()) {
        config.policy.kind = policy_from_name(policy);
        config.policy.has_schedule = false;
        config.policy.schedule = KappaSchedule{};
    }
    const std::vector<double> points = parse_range(values);
    std::ostringstream out;
    out << "param,value,policy,mse_gain_db,mse_gain_se_db,cost_gain_db,policy_mse,"
           "uniform_mse\n";
    for (double v : points) {
        ScenarioConfig c = config;
        if (param == "pi0") {
            c.params.stay_prob = v;
        } else if (param == "beta") {
            // keep the expected number of targets constant
            c.params.birth_prob = v;
            c.params.death_prob =
                v / (c.params.prior_prob * static_cast<double>(c.params.q));
        } else if (param == "snr") {
            c.snr_db = v;
            c.params.budgets.clear();
            c.explicit_budgets = false;
        } else {
            throw config_error("sweep: param must be pi0, beta, or snr");
        }
        const EvaluationReport report = evaluate(c);
        out << param << ',' << format_double(v) << ',' << report.policy.name << ','
            << format_double(report.mse_gain_db) << ','
            << format_double(report.mse_gain_se_db) << ','
            << format_double(report.cost_gain_db) << ','
            << format_double(report.policy.mse_mean) << ','
            << format_double(report.uniform.mse_mean) << '\n';
    }
    const fs::path path = prepare_out_dir(flags.out_dir) / "sweep.csv";
    std::ofstream file(path);
    if (!file) throw config_error("cannot write file: " + path.string());
    file << out.str();
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

int cmd_plotdata(const CommonFlags& flags, const std::vector<std::string>& inputs) {
    if (inputs.empty()) throw config_error("plotdata: needs at least one --in file");
    const fs::path path = prepare_out_dir(flags.out_dir) / "plotdata.csv";
    write_plotdata_csv(path.string(), inputs);
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive search-and-track allocation toolkit"};
    app.require_subcommand(1);

    CommonFlags train_flags, run_flags, bounds_flags, sweep_flags, plot_flags;

    auto* train = app.add_subcommand("train", "train an exploration schedule");
    add_common(train, train_flags);
    std::string method = "myopic_plus";
    int t0 = 5;
    double rho = 0.1;
    int train_mc = 0;
    train->add_option("--method", method, "offline_rollout or myopic_plus");
    train->add_option("--t0", t0, "base tail length for offline rollout");
    train->add_option("--rho", rho, "myopic+ tolerance");
    train->add_option("--mc", train_mc, "Monte Carlo trials per grid point");

    auto* run = app.add_subcommand("run", "evaluate a policy on a scenario");
    add_common(run, run_flags);
    std::string policy, scenario, schedule_path;
    double theta0 = 0.0;
    run->add_option("--policy", policy, "policy name");
    run->add_option("--scenario", scenario, "standard, mismatch, or missing");
    run->add_option("--theta0", theta0, "true amplitude for the mismatch scenario");
    run->add_option("--schedule", schedule_path, "schedule.json for darap policies");

    auto* bounds = app.add_subcommand("bounds", "closed-form gain bounds over an SNR grid");
    add_common(bounds, bounds_flags, /*with_snr=*/false);
    std::string snr_range;
    bounds->add_option("--snr-db,--snr-range", snr_range,
                       "start:stop:step or comma list (dB), default 0:30:1");

    auto* sweep = app.add_subcommand("sweep", "evaluate a policy across a parameter sweep");
    add_common(sweep, sweep_flags);
    std::string sweep_param = "snr", sweep_values, sweep_policy;
    sweep->add_option("--param", sweep_param, "pi0, beta, or snr");
    sweep->add_option("--values", sweep_values, "comma list or start:stop:step")
        ->required();
    sweep->add_option("--policy", sweep_policy, "policy name");

    auto* plot = app.add_subcommand("plotdata", "merge metrics files into one CSV");
    add_common(plot, plot_flags);
    std::vector<std::string> plot_inputs;
    plot->add_option("--in", plot_inputs, "metrics.json files to merge");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (train->parsed()) return cmd_train(train_flags, method, t0, rho, train_mc);
        if (run->parsed())
            return cmd_run(run_flags, policy, scenario, theta0, schedule_path);
        if (bounds->parsed()) return cmd_bounds(bounds_flags, snr_range);
        if (sweep->parsed())
            return cmd_sweep(sweep_flags, sweep_param, sweep_values, sweep_policy);
        if (plot->parsed()) return cmd_plotdata(plot_flags, plot_inputs);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
