#pragma once

// JSON-configured experiment runner behind the command-line tool.

#include "invlab/core.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace invlab {

/// Schema violation; what() starts with the offending field path.
class ConfigError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Environment variable that, when set, replaces the working directory as the
/// base for relative output_dir values.
inline constexpr const char* kOutputRootEnv = "INVLAB_OUTPUT_ROOT";

nlohmann::json load_config(const std::string& path);

/// Full schema check without running anything. Throws ConfigError.
void validate_config(const nlohmann::json& config);

struct ExperimentOutcome {
  nlohmann::json report;
  std::string output_dir;
  bool converged = true;  // false maps to exit code 3
};

/// Validates, runs and writes report.json plus problem-specific artifacts.
ExperimentOutcome run_experiment(const nlohmann::json& config);

/// One run per axis value; `axis` is a dotted key path into the config.
/// Rows land in <output_dir>/<axis>=<value>/ and the summary in <output_dir>/table.csv.
struct SweepOutcome {
  std::vector<ExperimentOutcome> rows;
  std::string output_dir;
  bool all_converged = true;
};
SweepOutcome run_sweep(const nlohmann::json& base, const std::string& axis,
                       const std::vector<nlohmann::json>& values);

/// Parses "name=v1,v2,..." into the key path and JSON scalar values.
std::pair<std::string, std::vector<nlohmann::json>> parse_axis(const std::string& spec);

/// Sets a dotted key path, creating intermediate objects.
void set_path(nlohmann::json& config, const std::string& dotted, const nlohmann::json& value);

/// Scientific notation with 6 significant digits; empty for NaN.
std::string format_sci(double v);

}  // namespace invlab
