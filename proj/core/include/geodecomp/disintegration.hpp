#pragma once

// Level classes G_a, the three estimators of lambda_t and strip-based
// estimates of the conditional measures m_{a,t} and m^_{a,t}.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "geodecomp/potential_flow.hpp"
#include "geodecomp/spaces.hpp"
#include "geodecomp/transport_models.hpp"
#include "geodecomp/types.hpp"

namespace geodecomp::disint {

/// Geodesics whose starting level phi(gamma_0) lies within half_width of a.
struct LevelClass {
  double a = 0.0;
  double half_width = 0.0;
  std::vector<std::size_t> members;
  double weight = 0.0;
};

/// Equal-width bins over [min phi0, max phi0]; empty bins are dropped and
/// a is the bin center. With n_bins = 1 the single class has a at the center.
std::vector<LevelClass> partition_levels(const spaces::DynamicalPlan& plan, const std::vector<double>& phi0,
                                         std::size_t n_bins);

/// Exact level sets: geodesics are chained by ascending phi0 while consecutive
/// gaps stay within tol (1 + |phi0|). a is the mean level of each group.
std::vector<LevelClass> group_levels(const spaces::DynamicalPlan& plan, const std::vector<double>& phi0,
                                     double tol = 1e-9);

struct PartitionReport {
  bool pass = true;
  /// Smallest |gamma_s - gamma^_u| over distinct (s, gamma) != (u, gamma^)
  /// in the class, excluding s = u in {0, 1}.
  double min_distance = 0.0;
  std::size_t comparisons = 0;
};

PartitionReport check_partition(const spaces::DynamicalPlan& plan, const LevelClass& cls,
                                const std::vector<double>& s_grid, double tol = 1e-12);

enum class LambdaMethod { Incremental, Sojourn, Hessian };
std::string to_string(LambdaMethod m);

struct LambdaEstimate {
  std::size_t geodesic = 0;
  double t = 0.0;
  LambdaMethod method = LambdaMethod::Hessian;
  double value = 0.0;
};

/// 1/lambda_t = lim (Phi_t(gamma_t) - Phi_t(gamma_{t+s})) / s, extrapolated
/// over s_sequence by polynomial (Richardson) extrapolation. Backward
/// quotients are used when gamma_{t+s} is past tau = 1 or outside the domain
/// of Phi_t. Throws AssumptionError on a
/// nonpositive limit and DomainError when Phi_t is undefined on the stencil.
LambdaEstimate lambda_incremental(const spaces::Geodesic& g, std::size_t index, double t,
                                  const std::vector<double>& s_sequence, const flow::LevelFunction& Phi);

/// lambda_t = lim (1/eps) |{tau : Phi_t(gamma_tau) in [a - eps, a]}| with
/// a = Phi_t(gamma_t). The preimage is bracketed by a root solve; the limit is
/// extrapolated over eps_sequence. When the forward walk leaves the domain of
/// Phi_t, the sojourn in [a, a + eps] before t is used instead. Throws
/// AssumptionError if tau -> Phi_t(gamma_tau) is not decreasing on the bracket.
LambdaEstimate lambda_sojourn(const spaces::Geodesic& g, std::size_t index, double t,
                              const std::vector<double>& eps_sequence, const flow::LevelFunction& Phi);

/// 1/lambda_t = <(I + t H) g, g> with g = grad phi_t and H = Hess phi_t at gamma_t.
/// Throws AssumptionError if the form is not positive.
LambdaEstimate lambda_hessian(const Point& grad_phi_t, const Matrix& hess_phi_t, double t, std::size_t index);

/// As above with grad and Hessian of phi_t by central differences.
LambdaEstimate lambda_hessian(const ScalarField& phi_t, const Point& z, double t, std::size_t index,
                              double step = 1e-5);

/// Closed-form grad phi_t = grad phi(x0), Hess phi_t = H (I - t H)^{-1}, H = Hess phi(x0).
LambdaEstimate lambda_hessian(const models::TransportModel& model, const Point& x0, double t, std::size_t index);

/// phi_t(z) = Phi_t(z) - (t/2) |grad phi(source_of(t, z))|^2 for an analytic
/// model. Throws DomainError off e_t(support).
ScalarField evolved_potential(const models::TransportModel& model, double t);

/// Deterministic stream: mt19937_64 seeded from (seed, stream) and
/// doubles built from the top 53 bits, so draws are identical across
/// standard libraries.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream);
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

struct WeightedCloud {
  std::vector<Point> points;
  std::vector<double> weights;
  /// Estimated reference mass of the strip.
  double mass = 0.0;
};

struct StripOptions {
  double eps = 1e-3;
  std::size_t budget = 100000;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::size_t min_accepted = 100;
};

struct StripResult {
  /// Reference mass on {z : Phi_t(z) in [a - eps, a]}, about eps * m^_{a,t}.
  WeightedCloud m_hat;
  /// Reference mass on e([t, t + eps] x G_a), about eps * m_{a,t}.
  WeightedCloud m;
  std::size_t proposals = 0;

  double ratio() const { return m_hat.mass / m.mass; }
};

/// Both strips by rejection sampling against the reference measure in a box
/// covering e_t and e_{t+eps} of the support. Throws ResolutionError if either
/// strip receives fewer than min_accepted points.
StripResult strip_conditionals(const models::TransportModel& model, double a, double t, const StripOptions& opt);

/// (1/eps) mu_t({Phi_t in [a - eps, a]}) estimated by pushing forward samples of
/// mu_0. With a fixed (seed, stream) the same mu_0 samples are used at every t.
double level_mass_density(const models::TransportModel& model, double a, double t, const StripOptions& opt);

}  // namespace geodecomp::disint
