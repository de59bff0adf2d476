#pragma once

// Run configurations and the command pipeline behind the kmm tool.
//
// A RunConfig is a JSON document:
//   {
//     "command": "dispersion" | "gap" | "oscillator" | "manifolds" | "density"
//                | "correlations" | "emulator" | "verify",
//     "model":   {"M": 200, "epsilon": 1, "b": -0.2}   or   {"M": 200, "B": 0.4},
//     "options": { command specific },
//     "output":  {"path": "out.csv", "format": "csv" | "json"},
//     "threads": 0,
//     "cache":   true,
//     "cache_dir": "..."
//   }
// "B" sets epsilon = 1 and b = -B/2 and takes precedence over "b".

#include "kmm/io.hpp"
#include "kmm/model.hpp"

#include <json.hpp>

#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace kmm {

enum ExitCode : int {
  kExitSuccess = 0,
  kExitUsage = 1,
  kExitValidationFailure = 2,
  kExitBudgetRefused = 3,
};

/// Schema violation at a JSON pointer.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

struct GridSpec;

struct RunConfig {
  std::string command;
  std::optional<ModelParams> model;
  int model_M = 0; ///< chain length even when no full model is given
  nlohmann::ordered_json options = nlohmann::ordered_json::object(); ///< normalized, defaults filled
  std::string output_path;   ///< empty writes to the output stream
  std::string format;        ///< csv or json
  int threads = 0;
  bool use_cache = true;
  std::string cache_dir;     ///< empty uses KernelCache::default_directory()
};

const std::vector<std::string>& command_names();

/// Validates against the schema and fills defaults. Throws ConfigError.
RunConfig parse_config(const nlohmann::json& j);

/// Executes a parsed config and returns the report. Throws DomainError,
/// BudgetExceeded or std::runtime_error.
Report execute(const RunConfig& cfg, const WarningSink& warn = {});

/// Parses, executes and writes the report; maps failures to exit codes and
/// machine-readable error records on err.
int run(const nlohmann::json& config, std::ostream& out, std::ostream& err);
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// {"error": kind, "field": pointer, "message": text}
nlohmann::ordered_json error_record(const std::string& kind, const std::string& field,
                                    const std::string& message);

} // namespace kmm
