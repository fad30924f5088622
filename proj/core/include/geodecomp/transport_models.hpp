#pragma once

// Closed-form transports T(x) = x - grad phi(x) with their Kantorovich
// potentials, source densities and the inverse of the evaluation map e_t.
// These are the analytic scenarios every check is measured against.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geodecomp/spaces.hpp"
#include "geodecomp/types.hpp"

namespace geodecomp::models {

/// Axis-aligned box [lo, hi].
struct Box {
  Point lo;
  Point hi;

  double volume() const;
  bool contains(const Point& x) const;
  /// Smallest box containing both.
  static Box hull(const Box& a, const Box& b);
};

/// Quadrature nodes for the source measure with weights summing to 1.
struct SourceSample {
  std::vector<Point> points;
  std::vector<double> weights;
};

/// A transport between mu_0 = rho0 m and mu_1 = T_# mu_0 with T = Id - grad phi.
/// phi is the d^2-concave Kantorovich potential; phi_c its c-transform on the
/// target support.
class TransportModel {
 public:
  explicit TransportModel(spaces::ModelSpace space);
  virtual ~TransportModel() = default;

  const spaces::ModelSpace& space() const noexcept { return space_; }
  int dim() const noexcept { return space_.dim(); }

  virtual std::string name() const = 0;
  virtual double phi(const Point& x) const = 0;
  virtual Point grad_phi(const Point& x) const = 0;
  virtual Matrix hess_phi(const Point& x) const = 0;
  virtual double phi_c(const Point& y) const = 0;
  /// Density of mu_0 with respect to m; zero off the support.
  virtual double rho0(const Point& x) const = 0;
  virtual bool in_source_support(const Point& x) const = 0;
  /// Bounding box of e_t(support of mu_0).
  virtual Box support_box(double t) const = 0;
  /// The unique source x with (1 - t) x + t T(x) = z, if z lies in e_t(support).
  virtual std::optional<Point> source_of(double t, const Point& z) const = 0;
  /// Deterministic quadrature of mu_0 with `per_axis` nodes per coordinate.
  virtual SourceSample source_grid(std::size_t per_axis) const = 0;

  Point map(const Point& x) const { return x - grad_phi(x); }
  Matrix map_jacobian(const Point& x) const;
  /// gamma_t for the geodesic starting at x.
  Point eval(const Point& x, double t) const;
  /// L(gamma) = |grad phi(x)|.
  double length(const Point& x) const { return grad_phi(x).norm(); }
  /// rho_t(gamma_t) for the geodesic starting at x.
  double rho_t(const Point& x, double t) const;
  /// Phi_t(z) = phi(source_of(t, z)). Throws DomainError off e_t(support).
  double Phi(double t, const Point& z) const;
  /// 1/lambda_t(gamma_t) = <(I - t Hphi(x))^{-1} grad phi(x), grad phi(x)>,
  /// the Euclidean Hessian formula written in terms of the time-0 potential.
  double inv_lambda(const Point& x, double t) const;
  spaces::TransportMap transport_map() const;

 private:
  spaces::ModelSpace space_;
};

/// phi(x) = v.x on the box [lo, hi]; T(x) = x - v.
std::unique_ptr<TransportModel> make_translation(int dim, Point v, Point lo, Point hi);
/// phi(x) = alpha |x|^2 / 2 on the annulus r_in <= |x| <= r_out (the positive
/// segment in dimension 1); T(x) = (1 - alpha) x.
std::unique_ptr<TransportModel> make_dilation(int dim, double alpha, double r_in, double r_out);
/// phi(x) = |x - A|^2 / 2 on the annulus r_in <= |x - A| <= r_out; T = A.
std::unique_ptr<TransportModel> make_radial_to_point(Point A, double r_in, double r_out);
/// T(x) = c - beta x on [lo, hi] in R. Not optimal: geodesics collapse at
/// t = 1 / (1 + beta), and L(gamma) = f(phi(gamma_0)) with a - f^2/2 decreasing.
std::unique_ptr<TransportModel> make_reversal_1d(double beta, double c, double lo, double hi);
/// Monotone transport between the restrictions of m to [p0, q0] and [p1, q1],
/// normalized, on an interval space.
std::unique_ptr<TransportModel> make_quantile_1d(const spaces::ModelSpace& space, double p0, double q0, double p1,
                                                 double q1, std::size_t cells = 512);

}  // namespace geodecomp::models
