#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "feller/criteria.hpp"

namespace feller {

inline constexpr const char* kSchemaVersion = "feller-report/1";
inline constexpr const char* kToolVersion = "0.1.0";

struct ExperimentConfig {
  Json raw;  // the config document, with the effective seed written back
  Model model;
  std::vector<Json> checks;
  std::uint64_t seed = 0;
  std::string format = "json";  // json | csv
  std::string output_path;      // empty: stdout
  unsigned threads = 1;
};

// Validates the document; errors are InputErrors naming the field path. The
// seed must be present unless `seed_override` is given.
ExperimentConfig parse_config(const Json& doc, std::optional<std::uint64_t> seed_override = std::nullopt);
ExperimentConfig load_config(const std::string& path,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

enum class Command { run, simulate, estimate_invariant, check_conditions, check_criteria, couple_verify, oracle_chain };
std::optional<Command> parse_command(const std::string& name);
const char* to_string(Command c);

// Runs the checks of the config that belong to `command` (all of them for
// `run`). Subcommands with no matching check run their default check when
// one exists. A ResourceError from any check is rethrown naming the check;
// every other check outcome becomes a result entry with a terminal status.
Json run_experiment(const ExperimentConfig& config, Command command = Command::run);

// FNV-1a over the report with "metadata" and "determinism_hash" removed.
std::string determinism_hash(const Json& report);

// One row per scalar leaf of each result: check, kind, status, key, value.
std::string report_to_csv(const Json& report);

}  // namespace feller
