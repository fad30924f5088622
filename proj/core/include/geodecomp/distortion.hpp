#pragma once

// Volume distortion coefficients sigma_{K,N}, tau_{K,N} and varsigma_{K,N}
// of curvature-dimension theory, plus a finite-difference residual of the
// ODE y'' + theta^2 (K/N) y = 0 that sigma solves in t.

#include <limits>

#include "geodecomp/types.hpp"

namespace geodecomp::distortion {

/// Curvature lower bound K and dimension upper bound N >= 1.
class DistortionParams {
 public:
  DistortionParams(double K, double N);

  double K() const noexcept { return K_; }
  double N() const noexcept { return N_; }

 private:
  double K_;
  double N_;
};

/// A nonnegative real or +infinity. Distortion coefficients take the value
/// +infinity in the supercritical regime K theta^2 >= N pi^2.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  explicit ExtendedReal(double value);

  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    return r;
  }

  bool is_infinite() const noexcept { return infinite_; }
  bool is_finite() const noexcept { return !infinite_; }

  /// Finite value; throws DomainError on +infinity.
  double value() const;
  /// Finite value, or std::numeric_limits<double>::infinity().
  double to_double() const noexcept {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  /// x^p for p > 0; +inf^p = +inf.
  ExtendedReal pow(double p) const;

  friend ExtendedReal operator*(double a, const ExtendedReal& x);
  friend ExtendedReal operator*(const ExtendedReal& x, double a) { return a * x; }
  friend bool operator==(const ExtendedReal&, const ExtendedReal&) = default;

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

/// Below this |K theta^2| the sin/sinh ratio is evaluated by its Taylor series.
inline constexpr double kTaylorThreshold = 1e-9;

/// sigma_{K,N}^{(t)}(theta): sin(t theta sqrt(K/N)) / sin(theta sqrt(K/N)) for
/// 0 < K theta^2 < N pi^2, the sinh analogue for K < 0, t for K theta^2 = 0
/// and +inf for K theta^2 >= N pi^2.
ExtendedReal sigma(const DistortionParams& p, double t, double theta);

/// tau_{K,N}^{(t)}(theta) = t^{1/N} sigma_{K,N-1}^{(t)}(theta)^{(N-1)/N}.
/// For N = 1 this is t when K <= 0 and +inf when K > 0 and theta > 0.
ExtendedReal tau(const DistortionParams& p, double t, double theta);

/// varsigma_{K,N}^{(t)}(theta) = tau_{K,N}^{(t)}(theta)^N.
ExtendedReal varsigma(const DistortionParams& p, double t, double theta);

/// The mixing step inside tau: t^{1/N} s^{(N-1)/N} for a given
/// sigma_{K,N-1} value s. tau() is computed through this function, so callers
/// that split tau into its one-dimensional and (N-1)-dimensional factors get
/// bit-identical results.
ExtendedReal tau_from_sigma(double t, const ExtendedReal& sigma_n_minus_1, double N);

/// max over the interior grid t_i = i h of
/// |(sigma(t+h) - 2 sigma(t) + sigma(t-h)) / h^2 + theta^2 (K/N) sigma(t)|.
/// Throws DomainError if sigma is supercritical for (K, N, theta).
double ode_residual(const DistortionParams& p, double theta, double grid_step);

}  // namespace geodecomp::distortion
