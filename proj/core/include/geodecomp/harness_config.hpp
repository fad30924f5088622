#pragma once

// Scenario configuration: JSON parsing with field-level validation, the
// canonical check list, and construction of the model and plan it describes.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geodecomp/spaces.hpp"
#include "geodecomp/transport_models.hpp"

namespace geodecomp::harness {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

/// Raised for malformed or inapplicable configurations. what() starts with
/// the offending field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// All checks in execution order: potentials, then disintegration, then
/// decomposition.
const std::vector<std::string>& check_names();

struct SpaceSpec {
  /// euclidean | interval | sine_power | cone
  std::string kind = "euclidean";
  int dim = 1;
  double lo = 0.0;
  double hi = 1.0;
  double N = 1.0;
};

struct TransportSpec {
  /// translation | dilation | radial | reversal | quantile
  std::string kind;
  std::vector<double> v;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<double> A;
  double alpha = 0.0;
  double r_in = 0.0;
  double r_out = 0.0;
  double beta = 0.0;
  double c = 0.0;
  double interval_lo = 0.0;
  double interval_hi = 0.0;
  std::vector<double> source;
  std::vector<double> target;
  std::size_t cells = 512;
};

struct GridSpec {
  std::vector<double> t_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> s_sequence{4e-3, 2e-3, 1e-3};
  std::vector<double> eps_sequence{4e-3, 2e-3, 1e-3};
  std::size_t geodesics_per_axis = 8;
  std::size_t bins = 4;
  double strip_eps = 3e-3;
  std::size_t strip_budget = 4000000;
  std::uint64_t seed = 0;
  /// Expected ratio of sampled evolution errors when the grid doubles; 0 records
  /// the ratio without asserting it.
  double doubling_ratio = 2.0;
};

struct ToleranceSpec {
  double duality = 1e-9;
  double identity = 1e-6;
  double doubling = 0.3;
  double lambda_incremental = 1e-4;
  double lambda_sojourn = 1e-3;
  double strip = 5e-2;
  double decomposition = 1e-6;
  double drift_analytic = 1e-8;
  double drift_mc = 1e-3;
  double cd = 1e-8;
  double equality = 1e-10;
  double linear = 1e-8;
  double w2 = 1e-4;
  double mcp = 1e-6;
  double partition = 1e-12;
};

/// Value intervals below the class level: [a - hi, a - lo].
struct W2Spec {
  bool enabled = false;
  double first_lo = 0.0;
  double first_hi = 0.0;
  double second_lo = 0.0;
  double second_hi = 0.0;
  std::size_t n_time = 5;
  std::size_t n_samples = 4;
};

struct ScenarioConfig {
  int schema_version = kSchemaVersion;
  std::string name;
  std::string description;
  SpaceSpec space;
  TransportSpec transport;
  double K = 0.0;
  double N = 1.0;
  double sharpness_K = 0.0;
  GridSpec grids;
  ToleranceSpec tolerances;
  /// non_decreasing | non_increasing
  std::string orientation = "non_decreasing";
  /// hessian | incremental | sojourn
  std::string lambda_method = "hessian";
  std::vector<std::string> checks;
  /// Checks whose precondition must reject the scenario.
  std::vector<std::string> expect_rejection;
  /// Checks whose residuals must vanish within tolerances.equality.
  std::vector<std::string> expect_equality;
  W2Spec w2;

  bool has_check(const std::string& name) const;
};

/// Parses and validates; unknown keys are rejected.
ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config(const std::string& path);
/// Normalized echo with defaults filled in; parse_config(to_json(c)) == c.
nlohmann::json to_json(const ScenarioConfig& c);

std::unique_ptr<models::TransportModel> build_model(const ScenarioConfig& c);
/// Geodesics from the model's source quadrature to their images under T.
spaces::DynamicalPlan build_plan(const models::TransportModel& model, std::size_t per_axis);

}  // namespace geodecomp::harness
