#pragma once

#include <string>

#include "darap/harness.hpp"
#include "darap/policy.hpp"

namespace darap {

// Reads a scenario configuration from a JSON or TOML file (decided by
// extension). Unknown keys fail with the offending field path.
ScenarioConfig load_config(const std::string& path);

// Schedule files: {schema_version, T, snr_db, kappas, provenance, seed, ...}.
void save_schedule(const std::string& path, const KappaSchedule& schedule, double snr_db,
                   std::uint64_t seed);
void save_schedule_with_records(const std::string& path, const MyopicPlusResult& result,
                                double snr_db, std::uint64_t seed);
KappaSchedule load_schedule(const std::string& path);

// Evaluation outputs: scalar metrics as JSON, per-stage series as CSV.
void write_metrics_json(const std::string& path, const ScenarioConfig& config,
                        const EvaluationReport& report);
void write_per_stage_csv(const std::string& path, const EvaluationReport& report);

// Long-format merge of several metrics.json files for external plotting.
void write_plotdata_csv(const std::string& out_path,
                        const std::vector<std::string>& metrics_paths);

// Number formatting used by every writer: shortest round-trip decimal.
std::string format_double(double v);

}  // namespace darap
