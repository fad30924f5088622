#pragma once

// Hopf-Lax evolution of sampled Kantorovich potentials, the level function
// Phi_t and its identity and monotonicity checks along plan geodesics.

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "geodecomp/spaces.hpp"
#include "geodecomp/transport_models.hpp"
#include "geodecomp/types.hpp"

namespace geodecomp::flow {

enum class Provenance { Analytic, HopfLaxEvolved, DualFromSolver };

/// A potential sampled at finitely many points.
struct PotentialField {
  std::vector<Point> points;
  std::vector<double> values;
  Provenance provenance = Provenance::Analytic;
};

/// H_t^s(psi)(x): inf_y |x - y|^2 / (2 (s - t)) + psi(y) for t < s and
/// sup_y psi(y) - |x - y|^2 / (2 (t - s)) for t > s, over the sample points of
/// psi. For t = s every query point must be a sample point and psi is returned.
PotentialField hopf_lax(const PotentialField& psi, double t, double s, const std::vector<Point>& query_points);

/// phi_t = -H_1^t(phi^c) evaluated at e_t(G), in plan order. `phi_c` is
/// sampled on the target side.
PotentialField evolve_kantorovich(const PotentialField& phi_c, double t, const spaces::DynamicalPlan& plan);

struct LevelFunctionSample {
  std::size_t geodesic = 0;
  double t = 0.0;
  /// phi_t(gamma_t) + (t/2) L^2.
  double Phi_value = 0.0;
  double L_value = 0.0;
  /// phi(gamma_0), the equivalent definition.
  double Phi_start = 0.0;

  double discrepancy() const;
};

/// Both definitions of Phi_t on e_t(G). `phi_t` holds phi_t(gamma_t) and `phi0`
/// holds phi(gamma_0), both in plan order.
std::vector<LevelFunctionSample> phi_level(const spaces::DynamicalPlan& plan, const std::vector<double>& phi_t,
                                           const std::vector<double>& phi0, double t);

/// Phi_t as a function on space: returns nullopt off its domain.
using LevelFunction = std::function<std::optional<double>(double t, const Point& z)>;

/// Phi_t(z) = phi(source_of(t, z)) for an analytic model.
LevelFunction analytic_level(const models::TransportModel& model);

/// One-dimensional plans: Phi_t is the piecewise-linear interpolant of
/// (gamma_t^{(j)}, phi(gamma_0^{(j)})) over the geodesics, sorted by gamma_t.
LevelFunction sampled_level_1d(const spaces::DynamicalPlan& plan, const std::vector<double>& phi0);

struct MonotoneVerdict {
  bool pass = true;
  std::size_t comparisons = 0;
  std::size_t skipped = 0;
  /// Smallest of Phi_t(gamma_{t-s}) - Phi_t(gamma_t) and
  /// Phi_t(gamma_t) - Phi_t(gamma_{t+s}) over all comparisons.
  double min_gap = 0.0;
  std::size_t worst_geodesic = 0;
  double worst_s = 0.0;
};

/// Strict decrease of tau -> Phi_t(gamma_tau) at tau = t - s, t, t + s.
/// Comparisons where gamma_{t +- s} falls outside the domain are skipped;
/// s = 0 entries are ignored.
MonotoneVerdict check_phi_monotone(const LevelFunction& Phi, const spaces::DynamicalPlan& plan, double t,
                                   const std::vector<double>& s_grid);

struct AssumptionReport {
  double t = 0.0;
  /// max |L_i - L_j| / |gamma_t^i - gamma_t^j| over the plan.
  double lipschitz = 0.0;
  /// Extrapolated lim (Phi_t(gamma_t) - Phi_t(gamma_{t+s})) / s, min and max
  /// over geodesics. Positive and finite when the assumption holds.
  double aphi_min = 0.0;
  double aphi_max = 0.0;
  bool finite = true;
  std::size_t undefined = 0;

  bool holds() const { return finite && undefined == 0 && aphi_min > 0.0; }
};

std::vector<AssumptionReport> check_assumptions(const LevelFunction& Phi, const spaces::DynamicalPlan& plan,
                                                const std::vector<double>& t_grid,
                                                const std::vector<double>& s_sequence);

/// Error of phi_t evolved from solver duals. The model's source is discretized
/// with `per_axis` nodes per coordinate, solved exactly, and phi_t = -H_1^t of
/// the target dual is compared with the exact phi(x) - (t/2)|grad phi(x)|^2 at
/// e_t(x) for x on the `n_query` source grid. Returns half the spread of the
/// difference over all queries and times, so the dual gauge drops out.
double sampled_evolution_error(const models::TransportModel& model, std::size_t per_axis,
                               const std::vector<double>& t_grid, std::size_t n_query);

/// Value at s = 0 of the polynomial through (s_k, f_k) (Neville).
double extrapolate_to_zero(const std::vector<double>& s, const std::vector<double>& f);

}  // namespace geodecomp::flow
