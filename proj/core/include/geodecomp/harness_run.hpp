#pragma once

// Deterministic scenario runner. Each requested check is evaluated
// independently from the configuration; failures are recorded and the run
// continues.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "geodecomp/harness_config.hpp"

namespace geodecomp::harness {

enum class Status { Pass, Fail, Warn };
std::string to_string(Status s);
Status status_from_string(const std::string& s);

/// One residual row. geodesic = -1 when the row is not tied to a geodesic;
/// t1 equals t0 for single-time residuals.
struct Residual {
  std::string quantity;
  std::int64_t geodesic = -1;
  double t0 = 0.0;
  double t1 = 0.0;
  double value = 0.0;
};

struct CheckResult {
  std::string name;
  Status status = Status::Pass;
  std::string message;
  /// Sorted by key.
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<Residual> residuals;
  std::optional<double> seconds;

  /// NaN when absent.
  double metric(const std::string& key) const;
};

struct RunReport {
  int schema_version = kSchemaVersion;
  std::string tool_version = kToolVersion;
  std::string scenario;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::vector<CheckResult> checks;
  std::optional<double> seconds;

  /// nullptr when the check did not run.
  const CheckResult* find(const std::string& name) const;
  bool any_failed() const;
  /// 0 when nothing failed, 1 otherwise; warnings do not count.
  int exit_code() const { return any_failed() ? 1 : 0; }
};

struct RunOptions {
  /// Overrides grids.seed.
  std::optional<std::uint64_t> seed;
  /// Worker threads; 0 means hardware concurrency. Results do not depend on it.
  std::size_t jobs = 1;
  /// Record wall-clock timings (makes the report nondeterministic).
  bool timing = false;
};

RunReport run(const ScenarioConfig& config, const RunOptions& options = {});

}  // namespace geodecomp::harness
