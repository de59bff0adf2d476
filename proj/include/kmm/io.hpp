#pragma once

// Report serialization (CSV with '#' provenance lines, or JSON) and the
// on-disk cache of solved contraction kernels.

#include "kmm/model.hpp"
#include "kmm/wick.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace kmm {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr int kCacheFormatVersion = 1;

/// A tabular result with provenance and scalar summary fields.
struct Report {
  nlohmann::ordered_json provenance = nlohmann::ordered_json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::ordered_json>> rows;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  /// Replaces the rows in JSON output when set (compact grids).
  std::optional<nlohmann::ordered_json> json_body;
};

nlohmann::ordered_json model_provenance(const ModelParams& p);

void write_csv(std::ostream& os, const Report& r);
void write_json(std::ostream& os, const Report& r);

/// Shortest round-trip text for a double.
std::string format_double(double v);

using WarningSink = std::function<void(const std::string&)>;

/// Solved dipole kernels stored as JSON files keyed by (epsilon, b, M).
class KernelCache {
public:
  explicit KernelCache(std::filesystem::path dir, WarningSink warn = {});

  /// KMM_CACHE_DIR, else $XDG_CACHE_HOME/kmm, else $HOME/.cache/kmm.
  static std::filesystem::path default_directory();

  const std::filesystem::path& directory() const noexcept { return dir_; }
  std::filesystem::path path_for(const ModelParams& p) const;

  /// Cached table or nullopt; unreadable entries are reported and ignored.
  std::optional<ContractionTable> load(const ModelParams& p) const;
  void store(const ModelParams& p, const ContractionTable& t) const;

  /// load, else solve_k2 and store.
  ContractionTable get_or_solve(const ModelParams& p) const;

private:
  std::filesystem::path dir_;
  WarningSink warn_;
};

} // namespace kmm
