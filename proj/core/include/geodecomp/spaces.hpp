#pragma once

// Model metric measure spaces with closed-form geodesics: weighted Euclidean
// space and weighted intervals. Geodesics are straight segments in both.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geodecomp/ot_core.hpp"
#include "geodecomp/types.hpp"

namespace geodecomp::spaces {

enum class SpaceKind { EuclideanWeighted, Interval1D };

/// (X, d, m) with d Euclidean and m = w * Lebesgue. For intervals, X = [lo, hi]
/// and w must be positive on the open interval.
class ModelSpace {
 public:
  /// R^dim with m = exp(log_density) dx; a null log_density means Lebesgue.
  static ModelSpace euclidean(int dim, ScalarField log_density = nullptr, std::string name = "euclidean");
  static ModelSpace interval(double lo, double hi, std::function<double(double)> density,
                             std::string name = "interval");
  /// (0, pi) with density sin^{N-1}; satisfies CD(N-1, N).
  static ModelSpace sine_power(double N);
  /// (0, 1] with density x^{N-1}; satisfies CD(0, N).
  static ModelSpace cone(double N);

  SpaceKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  const std::string& name() const noexcept { return name_; }
  double lo() const;
  double hi() const;

  /// Reference weight w(x) of m with respect to Lebesgue measure.
  double weight(const Point& x) const;
  double weight(double x) const;
  bool contains(const Point& x) const;
  double distance(const Point& x, const Point& y) const;

 private:
  ModelSpace() = default;

  SpaceKind kind_ = SpaceKind::EuclideanWeighted;
  int dim_ = 1;
  std::string name_;
  ScalarField log_density_;
  std::function<double(double)> density_1d_;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

/// Constant-speed segment from x0 to x1.
class Geodesic {
 public:
  Geodesic(Point x0, Point x1);

  const Point& x0() const noexcept { return x0_; }
  const Point& x1() const noexcept { return x1_; }
  double length() const noexcept { return length_; }

 private:
  Point x0_;
  Point x1_;
  double length_;
};

/// gamma_t = (1 - t) x0 + t x1. Throws DomainError for t outside [0, 1].
Point eval(const Geodesic& g, double t);

/// Optional bounds 1/C < L(gamma) < C on geodesic lengths.
struct LengthBounds {
  double C = 0.0;  // 0 disables the check
};

/// Finite weighted family of geodesics with distinct endpoint pairs.
class DynamicalPlan {
 public:
  DynamicalPlan(std::vector<Geodesic> geodesics, std::vector<double> weights);

  std::size_t size() const noexcept { return geodesics_.size(); }
  const std::vector<Geodesic>& geodesics() const noexcept { return geodesics_; }
  const Geodesic& geodesic(std::size_t i) const { return geodesics_.at(i); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double weight(std::size_t i) const { return weights_.at(i); }

  /// e_t pushforward as a discrete measure (points must stay distinct).
  ot::DiscreteMeasure evaluate_measure(double t) const;

 private:
  std::vector<Geodesic> geodesics_;
  std::vector<double> weights_;
};

/// One geodesic per positive-mass entry, weight = mass. Throws DomainError
/// when an endpoint lies outside the space or a length violates the bounds.
DynamicalPlan plan_from_coupling(const ot::Coupling& c, const ot::DiscreteMeasure& mu,
                                 const ot::DiscreteMeasure& nu, const ModelSpace& space,
                                 LengthBounds bounds = {});

/// Normalized density on [lo, hi] with a tabulated CDF. The CDF is built by
/// 15-point Gauss-Legendre quadrature on `cells` equal cells; the quantile
/// function is the left-continuous inverse, found by bracketing.
class Density1D {
 public:
  Density1D(double lo, double hi, std::function<double(double)> density, std::size_t cells = 512);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double mass() const noexcept { return total_; }
  /// Normalized density.
  double pdf(double x) const;
  double cdf(double x) const;
  double quantile(double q) const;

 private:
  double partial(std::size_t cell, double x) const;

  double lo_;
  double hi_;
  std::function<double(double)> density_;
  std::vector<double> cumulative_;  // unnormalized mass up to each cell edge
  double total_ = 0.0;
};

/// Monotone rearrangement of two 1D densities sampled at midpoint quantiles
/// q_k = (k + 1/2) / n. Source and target carry equal weights 1/n; the
/// coupling pairs index k with index k and carries duals for c = d^2/2.
struct QuantilePlan {
  ot::DiscreteMeasure source;
  ot::DiscreteMeasure target;
  ot::Coupling coupling;
};
QuantilePlan quantile_coupling(const Density1D& mu, const Density1D& nu, std::size_t n_quantiles);

/// Monotone (north-west corner) coupling of two discrete measures on the line,
/// with duals for c = d^2/2. Points need not be sorted.
ot::Coupling monotone_coupling(const ot::DiscreteMeasure& mu, const ot::DiscreteMeasure& nu);

/// Transport map with Jacobian, used to push densities forward.
struct TransportMap {
  std::function<Point(const Point&)> map;
  std::function<Matrix(const Point&)> jacobian;
};

/// rho_t(gamma_t(x)) where rho_0, rho_t are densities with respect to m:
/// rho_0(x) w(x) / (w(x_t) |det((1 - t) I + t DT(x))|). Returns +inf when the
/// Jacobian is singular.
double interpolant_density(const ModelSpace& space, const ScalarField& rho0, const TransportMap& T, double t,
                           const Point& x);

}  // namespace geodecomp::spaces
