#pragma once

// Assembly of rho_t = C(a) h_{a,t} / lambda_t along plan geodesics and the
// inequality checks built on it: reduced CD* midpoint inequality for h,
// pointwise CD(K,N), lambda linearity for the special class, the W2
// construction from monotone level intervals, and the MCP sandwich bound.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "geodecomp/disintegration.hpp"
#include "geodecomp/ot_core.hpp"
#include "geodecomp/spaces.hpp"
#include "geodecomp/transport_models.hpp"
#include "geodecomp/types.hpp"

namespace geodecomp::decomp {

struct DecompositionRecord {
  std::size_t geodesic = 0;
  double a = 0.0;
  double L = 0.0;
  std::vector<double> t_grid;
  std::vector<double> rho;
  std::vector<double> lambda;
  std::vector<double> h;
  /// Conditional normalization c(gamma, t) computed independently at each t.
  std::vector<double> c_local;
  /// Line density g(gamma, t) along the geodesic.
  std::vector<double> g;
  double C_a = 0.0;

  /// max_t |rho lambda / (C_a h) - 1|.
  double identity_residual() const;
  /// max_t |c_local / C_a - 1|.
  double normalization_drift() const;
  /// max_t |h g - 1|.
  double product_residual() const;
};

/// lambda_t along the geodesic starting at x0.
using LambdaFn = std::function<double(std::size_t geodesic, const Point& x0, double t)>;

/// c(gamma, t) = rho_t w(gamma_t) J_t / |grad Phi_t(gamma_t)| where J_t is the
/// Jacobian of x -> gamma_t(x) restricted to the level set of phi through x0
/// and grad Phi_t = (I - t H)^{-T} grad phi(x0). Constant in t by mass
/// conservation.
double local_normalization(const models::TransportModel& model, const Point& x0, double t);

/// g(gamma, tau) = w(gamma_tau) |det[J_tau B | grad phi(x0)]| with J_tau = I - tau H
/// and B an orthonormal basis of grad phi(x0)^perp.
double line_density(const models::TransportModel& model, const Point& x0, double tau);

/// One record per class member. C_a = c(gamma, 0) and h = rho lambda / C_a.
std::vector<DecompositionRecord> build_decomposition(const models::TransportModel& model,
                                                     const spaces::DynamicalPlan& plan,
                                                     const disint::LevelClass& cls, const LambdaFn& lambda,
                                                     const std::vector<double>& t_grid);

struct ResidualSample {
  std::size_t geodesic = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  double value = 0.0;
};

struct ResidualReport {
  std::vector<ResidualSample> samples;

  double min_residual() const;
  double max_abs_residual() const;
  /// Sample attaining the minimum; throws DomainError when empty.
  const ResidualSample& worst() const;
};

/// h^{-1/(N-1)}(mid) - sigma^{(1/2)}_{K,N-1}((t1 - t0) L) (h^{-1/(N-1)}(t0) + h^{-1/(N-1)}(t1))
/// for every grid pair whose midpoint is also on the grid. Requires N >= 2.
ResidualReport check_cd_star_reduced(const DecompositionRecord& record, double K, double N);

/// The (1/2) tau coefficient assembled from its one-dimensional and
/// (N-1)-dimensional factors; equals distortion::tau bit for bit.
double tau_half_split(double K, double N, double theta);

/// rho_t^{-1/N} - [tau^{(1-t)} rho_0^{-1/N} + tau^{(t)} rho_1^{-1/N}] with theta = L,
/// for each geodesic and t in t_grid. rho_1 = +inf contributes 0.
ResidualReport check_cd_pointwise(const models::TransportModel& model, const spaces::DynamicalPlan& plan, double K,
                                  double N, const std::vector<double>& t_grid);

enum class Orientation { NonDecreasing, NonIncreasing };

struct SpecialClassReport {
  /// L is constant on each level (within tolerance).
  bool length_is_function_of_level = true;
  double max_length_spread = 0.0;
  /// a -> a - f(a)^2 / 2 is monotone in the configured orientation.
  bool level_map_monotone = true;
  double worst_level_map_step = 0.0;
  Orientation orientation = Orientation::NonDecreasing;
  /// Informational: a -> a - f(a)^2 / a non-increasing (levels a != 0 only).
  bool alternative_reading_holds = true;
  std::size_t levels = 0;

  bool in_class() const { return length_is_function_of_level && level_map_monotone; }
};

/// Groups geodesics by level a (relative gap tol) and tests the special class
/// L(gamma) = f(phi(gamma_0)) with a - f^2/2 monotone.
SpecialClassReport check_special_class(const std::vector<double>& a, const std::vector<double>& L,
                                       Orientation orientation = Orientation::NonDecreasing, double tol = 1e-9);

struct LinearityVerdict {
  bool pass = true;
  double max_deviation = 0.0;
  std::size_t worst_geodesic = 0;
};

/// Per record, max deviation of lambda_t from its least-squares affine fit in t.
/// Throws PreconditionError when `special` is not in the special class.
LinearityVerdict check_lambda_linear(const std::vector<DecompositionRecord>& records, double tol,
                                     const SpecialClassReport& special);

/// Sampled curve t -> nu_t of uniform measures on the sub-segments
/// {s : phi_a(gamma_s) in [a_t, b_t]} of class members, phi_a(gamma_s) = a - s L.
struct W2Construction {
  std::vector<double> times;
  std::vector<ot::DiscreteMeasure> nu;
  std::vector<std::size_t> members;
  std::vector<std::size_t> excluded;
  /// (gamma_{R_0 + s L_0}, gamma_{R_1 + s L_1}) over members and sample nodes.
  std::vector<ot::PointPair> delta_pairs;
};

struct ValueInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Requires b_0 > a_0 > b_1 > a_1 or equal intervals. Members whose range
/// (a - L, a) does not contain both intervals are excluded.
W2Construction build_w2_from_monotone(const spaces::DynamicalPlan& plan, const disint::LevelClass& cls,
                                      ValueInterval first, ValueInterval second, std::size_t n_time,
                                      std::size_t n_samples);

struct W2Report {
  /// max over s < t of |W2(nu_s, nu_t) - |s - t| W2(nu_0, nu_1)|.
  double max_deviation = 0.0;
  double w2_endpoints = 0.0;
  ot::CycleVerdict monotone;
};

W2Report check_w2_geodesic(const W2Construction& c, const ot::CycleOptions& cycles = {});

/// Both sides of (s_K(rL)/s_K(RL))^{N-1} <= g(r)/g(R) <= (s_K((1-r)L)/s_K((1-R)L))^{N-1}
/// for r <= R on the grid, with s_K(x) = sin(x sqrt(K/(N-1))) (sinh for K < 0,
/// x for K = 0). Samples hold ratio - lower and upper - ratio.
ResidualReport check_mcp_bound(const std::vector<double>& tau, const std::vector<double>& g, double L, double K,
                               double N, std::size_t geodesic = 0);

}  // namespace geodecomp::decomp
