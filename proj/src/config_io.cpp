#include "darap/config_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace darap {

using nlohmann::json;

namespace {

// --- minimal TOML reader -------------------------------------------------
// Supports the subset used by the documented config schema: [table] and
// [table.sub] headers, key = value with integers, floats, booleans, quoted
// strings, and flat arrays, plus # comments. Everything maps onto JSON.

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

json parse_toml_scalar(const std::string& raw, const std::string& where) {
    const std::string v = trim(raw);
    if (v.empty()) throw config_error(where + ": missing value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"')
            throw config_error(where + ": unterminated string");
        return json(v.substr(1, v.size() - 2));
    }
    if (v == "true") return json(true);
    if (v == "false") return json(false);
    try {
        std::size_t used = 0;
        if (v.find_first_of(".eE") == std::string::npos &&
            v.find("inf") == std::string::npos && v.find("nan") == std::string::npos) {
            const long long i = std::stoll(v, &used);
            if (used == v.size()) return json(i);
        }
        const double d = std::stod(v, &used);
        if (used == v.size()) return json(d);
    } catch (const std::exception&) {
    }
    throw config_error(where + ": cannot parse value '" + v + "'");
}

json parse_toml_value(const std::string& raw, const std::string& where) {
    const std::string v = trim(raw);
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']') throw config_error(where + ": unterminated array");
        json arr = json::array();
        std::string inner = v.substr(1, v.size() - 2);
        std::string item;
        bool in_string = false;
        for (char c : inner) {
            if (c == '"') in_string = !in_string;
            if (c == ',' && !in_string) {
                if (!trim(item).empty()) arr.push_back(parse_toml_scalar(item, where));
                item.clear();
            } else {
                item += c;
            }
        }
        if (!trim(item).empty()) arr.push_back(parse_toml_scalar(item, where));
        return arr;
    }
    return parse_toml_scalar(v, where);
}

json parse_toml(std::istream& in) {
    json root = json::object();
    json* table = &root;
    std::string prefix;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        const std::string where = "line " + std::to_string(lineno);
        if (body.front() == '[') {
            if (body.back() != ']') throw config_error(where + ": malformed table header");
            prefix = trim(body.substr(1, body.size() - 2));
            table = &root;
            std::stringstream parts(prefix);
            std::string part;
            while (std::getline(parts, part, '.')) {
                part = trim(part);
                if (part.empty()) throw config_error(where + ": empty table name");
                table = &((*table)[part]);
                if (table->is_null()) *table = json::object();
            }
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw config_error(where + ": expected key = value");
        const std::string key = trim(body.substr(0, eq));
        if (key.empty()) throw config_error(where + ": empty key");
        (*table)[key] = parse_toml_value(body.substr(eq + 1), where + " (" + key + ")");
    }
    return root;
}

// --- typed extraction with field paths -----------------------------------

double get_number(const json& j, const std::string& path, double fallback, bool* present = nullptr) {
    const json* node = &j;
    std::stringstream parts(path);
    std::string part;
    while (std::getline(parts, part, '.')) {
        if (!node->is_object() || !node->contains(part)) {
            if (present) *present = false;
            return fallback;
        }
        node = &(*node)[part];
    }
    if (!node->is_number()) throw config_error(path + ": expected a number");
    if (present) *present = true;
    return node->get<double>();
}

std::string get_string(const json& j, const std::string& path, const std::string& fallback) {
    const json* node = &j;
    std::stringstream parts(path);
    std::string part;
    while (std::getline(parts, part, '.')) {
        if (!node->is_object() || !node->contains(part)) return fallback;
        node = &(*node)[part];
    }
    if (!node->is_string()) throw config_error(path + ": expected a string");
    return node->get<std::string>();
}

std::vector<double> get_array(const json& j, const std::string& path) {
    const json* node = &j;
    std::stringstream parts(path);
    std::string part;
    while (std::getline(parts, part, '.')) {
        if (!node->is_object() || !node->contains(part)) return {};
        node = &(*node)[part];
    }
    if (!node->is_array()) throw config_error(path + ": expected an array");
    std::vector<double> out;
    out.reserve(node->size());
    for (const auto& v : *node) {
        if (!v.is_number()) throw config_error(path + ": expected numeric entries");
        out.push_back(v.get<double>());
    }
    return out;
}

const char* const kKnownTop[] = {"model", "policy", "scenario", "snr_db",
                                 "trials", "seed", "threads", "pfa",
                                 "collect_detection"};
const char* const kKnownModel[] = {"q", "p0", "mu0", "sigma0", "delta", "sigma2",
                                   "pi0", "alpha", "beta", "neighbors", "horizon",
                                   "budgets", "gamma"};
const char* const kKnownPolicy[] = {"name", "t0", "rho", "train_mc", "online_mc",
                                    "kappas", "kappa_grid", "schedule_file"};
const char* const kKnownScenario[] = {"name", "theta0", "on", "off"};

template <std::size_t N>
void reject_unknown(const json& j, const std::string& prefix, const char* const (&known)[N]) {
    if (!j.is_object()) return;
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known)
            if (item.key() == k) ok = true;
        if (!ok)
            throw config_error(prefix + item.key() + ": unknown configuration key");
    }
}

ScenarioConfig config_from_json(const json& j) {
    reject_unknown(j, "", kKnownTop);
    if (j.contains("model")) reject_unknown(j["model"], "model.", kKnownModel);
    if (j.contains("policy")) reject_unknown(j["policy"], "policy.", kKnownPolicy);
    if (j.contains("scenario")) reject_unknown(j["scenario"], "scenario.", kKnownScenario);

    ScenarioConfig c;
    ModelParams& p = c.params;
    p.q = static_cast<int>(get_number(j, "model.q", p.q));
    p.prior_prob = get_number(j, "model.p0", p.prior_prob);
    p.amp_mean = get_number(j, "model.mu0", p.amp_mean);
    p.amp_std = get_number(j, "model.sigma0", p.amp_std);
    p.amp_walk_std = get_number(j, "model.delta", p.amp_walk_std);
    p.noise_var = get_number(j, "model.sigma2", p.noise_var);
    p.stay_prob = get_number(j, "model.pi0", p.stay_prob);
    p.death_prob = get_number(j, "model.alpha", p.death_prob);
    p.birth_prob = get_number(j, "model.beta", p.birth_prob);
    p.neighbor_count = static_cast<int>(get_number(j, "model.neighbors", p.neighbor_count));
    p.horizon = static_cast<int>(get_number(j, "model.horizon", p.horizon));
    p.budgets = get_array(j, "model.budgets");
    c.explicit_budgets = !p.budgets.empty();
    const std::vector<double> gamma = get_array(j, "model.gamma");
    if (!gamma.empty()) p.stage_weights = gamma;
    if (p.stage_weights.size() != static_cast<std::size_t>(p.horizon)) {
        p.stage_weights.assign(static_cast<std::size_t>(p.horizon), 0.0);
        p.stage_weights.back() = 1.0;
    }

    c.snr_db = get_number(j, "snr_db", c.snr_db);
    c.trials = static_cast<int>(get_number(j, "trials", c.trials));
    c.seed = static_cast<std::uint64_t>(get_number(j, "seed", 1.0));
    c.threads = static_cast<int>(get_number(j, "threads", c.threads));
    c.pfa = get_number(j, "pfa", c.pfa);
    if (j.contains("collect_detection")) {
        if (!j["collect_detection"].is_boolean())
            throw config_error("collect_detection: expected a boolean");
        c.collect_detection = j["collect_detection"].get<bool>();
    }

    c.policy.kind = policy_from_name(get_string(j, "policy.name", "uniform"));
    c.policy.t0 = static_cast<int>(get_number(j, "policy.t0", c.policy.t0));
    c.policy.rho = get_number(j, "policy.rho", c.policy.rho);
    c.policy.train_mc = static_cast<int>(get_number(j, "policy.train_mc", c.policy.train_mc));
    c.policy.online_mc =
        static_cast<int>(get_number(j, "policy.online_mc", c.policy.online_mc));
    c.policy.kappa_grid = get_array(j, "policy.kappa_grid");
    const std::vector<double> kappas = get_array(j, "policy.kappas");
    if (!kappas.empty()) {
        c.policy.schedule.kappas = kappas;
        c.policy.has_schedule = true;
    }
    const std::string schedule_file = get_string(j, "policy.schedule_file", "");
    if (!schedule_file.empty()) {
        c.policy.schedule = load_schedule(schedule_file);
        c.policy.has_schedule = true;
    }

    c.scenario.kind = scenario_from_name(get_string(j, "scenario.name", "standard"));
    c.scenario.theta0 = get_number(j, "scenario.theta0", c.scenario.theta0);
    c.scenario.on_stages = static_cast<int>(get_number(j, "scenario.on", c.scenario.on_stages));
    c.scenario.off_stages =
        static_cast<int>(get_number(j, "scenario.off", c.scenario.off_stages));
    return c;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw config_error(path + ": " + e.what());
    }
    return j;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

ScenarioConfig load_config(const std::string& path) {
    if (ends_with(path, ".toml")) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open file: " + path);
        return config_from_json(parse_toml(in));
    }
    return config_from_json(read_json_file(path));
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

KappaSchedule::Provenance provenance_from_name(const std::string& name) {
    if (name == "myopic") return KappaSchedule::Provenance::myopic;
    if (name == "uniform") return KappaSchedule::Provenance::uniform;
    if (name == "offline_rollout") return KappaSchedule::Provenance::offline_rollout;
    if (name == "myopic_plus") return KappaSchedule::Provenance::myopic_plus;
    return KappaSchedule::Provenance::manual;
}

json schedule_to_json(const KappaSchedule& schedule, double snr_db, std::uint64_t seed) {
    json j;
    j["schema_version"] = 1;
    j["T"] = schedule.kappas.size();
    j["snr_db"] = snr_db;
    j["kappas"] = schedule.kappas;
    j["provenance"] = provenance_name(schedule.provenance);
    j["seed"] = seed;
    if (schedule.provenance == KappaSchedule::Provenance::offline_rollout)
        j["t0"] = schedule.base_length;
    if (schedule.provenance == KappaSchedule::Provenance::myopic_plus)
        j["rho"] = schedule.rho;
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot write file: " + path);
    out << text;
}

}  // namespace

void save_schedule(const std::string& path, const KappaSchedule& schedule, double snr_db,
                   std::uint64_t seed) {
    write_text(path, schedule_to_json(schedule, snr_db, seed).dump(2) + "\n");
}

void save_schedule_with_records(const std::string& path, const MyopicPlusResult& result,
                                double snr_db, std::uint64_t seed) {
    json j = schedule_to_json(result.schedule, snr_db, seed);
    json records = json::array();
    for (const auto& rec : result.records) {
        json r;
        r["stage"] = rec.stage;
        r["grid"] = rec.grid;
        r["b_values"] = rec.b_values;
        r["b_zero"] = rec.b_zero;
        r["chosen"] = rec.chosen;
        records.push_back(std::move(r));
    }
    j["training_records"] = std::move(records);
    write_text(path, j.dump(2) + "\n");
}

KappaSchedule load_schedule(const std::string& path) {
    const json j = read_json_file(path);
    KappaSchedule s;
    if (!j.contains("kappas") || !j["kappas"].is_array())
        throw config_error(path + ": kappas: expected an array");
    for (const auto& v : j["kappas"]) s.kappas.push_back(v.get<double>());
    s.provenance = provenance_from_name(j.value("provenance", "manual"));
    s.base_length = j.value("t0", 0);
    s.rho = j.value("rho", 0.0);
    return s;
}

namespace {

// wall time stays out of the file so that reruns with one seed are
// byte-identical
json result_to_json(const PolicyResult& r) {
    json j;
    j["name"] = r.name;
    j["mse_mean"] = r.mse_mean;
    j["mse_se"] = r.mse_se;
    j["cost_mean"] = r.cost_mean;
    j["cost_se"] = r.cost_se;
    j["stage_mse"] = r.stage_mse;
    j["stage_cost"] = r.stage_cost;
    j["stage_pd"] = r.pd;
    return j;
}

}  // namespace

void write_metrics_json(const std::string& path, const ScenarioConfig& config,
                        const EvaluationReport& report) {
    json j;
    j["schema_version"] = 1;
    j["policy"] = policy_name(config.policy.kind);
    j["scenario"] = scenario_name(config.scenario.kind);
    if (config.scenario.kind == ScenarioKind::mismatch)
        j["theta0"] = config.scenario.theta0;
    j["snr_db"] = config.snr_db;
    j["trials"] = report.trials;
    j["seed"] = report.seed;
    j["pfa"] = report.pfa;
    j["mse_gain_db"] = report.mse_gain_db;
    j["mse_gain_se_db"] = report.mse_gain_se_db;
    j["cost_gain_db"] = report.cost_gain_db;
    j["results"] = json::object();
    j["results"][report.policy.name] = result_to_json(report.policy);
    j["results"]["uniform"] = result_to_json(report.uniform);
    write_text(path, j.dump(2) + "\n");
}

void write_per_stage_csv(const std::string& path, const EvaluationReport& report) {
    std::ostringstream out;
    out << "stage,policy_mse,uniform_mse,policy_cost,uniform_cost,policy_pd,uniform_pd\n";
    const std::size_t horizon = report.policy.stage_mse.size();
    auto cell = [&](const std::vector<double>& v, std::size_t t) {
        return t < v.size() ? format_double(v[t]) : std::string("nan");
    };
    for (std::size_t t = 0; t < horizon; ++t) {
        out << (t + 1) << ',' << cell(report.policy.stage_mse, t) << ','
            << cell(report.uniform.stage_mse, t) << ',' << cell(report.policy.stage_cost, t)
            << ',' << cell(report.uniform.stage_cost, t) << ',' << cell(report.policy.pd, t)
            << ',' << cell(report.uniform.pd, t) << '\n';
    }
    write_text(path, out.str());
}

void write_plotdata_csv(const std::string& out_path,
                        const std::vector<std::string>& metrics_paths) {
    std::ostringstream out;
    out << "source,policy,scenario,snr_db,stage,mse,cost,pd\n";
    for (const auto& path : metrics_paths) {
        const json j = read_json_file(path);
        const std::string scenario = j.value("scenario", "standard");
        const double snr = j.value("snr_db", 0.0);
        if (!j.contains("results")) throw config_error(path + ": results: missing");
        for (const auto& item : j["results"].items()) {
            const json& r = item.value();
            const auto& mse = r["stage_mse"];
            const auto& cost = r["stage_cost"];
            const auto& pd = r["stage_pd"];
            for (std::size_t t = 0; t < mse.size(); ++t) {
                out << path << ',' << item.key() << ',' << scenario << ','
                    << format_double(snr) << ',' << (t + 1) << ','
                    << format_double(mse[t].is_null() ? NAN : mse[t].get<double>()) << ','
                    << format_double(cost[t].is_null() ? NAN : cost[t].get<double>()) << ',';
                if (t < pd.size() && pd[t].is_number())
                    out << format_double(pd[t].get<double>());
                else
                    out << "nan";
                out << '\n';
            }
        }
    }
    write_text(out_path, out.str());
}

}  // namespace darap
