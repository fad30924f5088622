#include "geodecomp/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace geodecomp::distortion {

namespace {

void check_t_theta(double t, double theta) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("distortion: t must lie in [0,1], got " + std::to_string(t));
  }
  if (!(theta >= 0.0) || std::isinf(theta)) {
    throw DomainError("distortion: theta must be finite and >= 0, got " + std::to_string(theta));
  }
}

// sin(t u)/sin(u) with u^2 = x (x may be negative, giving the sinh ratio).
// Requires x < pi^2; the caller handles the supercritical branch.
double sine_ratio(double x, double t, bool taylor) {
  if (taylor) {
    // sin(tu)/sin(u) = t (1 - t^2 x/6 + t^4 x^2/120) / (1 - x/6 + x^2/120) + O(x^3)
    const double t2 = t * t;
    const double num = 1.0 - t2 * x / 6.0 + t2 * t2 * x * x / 120.0;
    const double den = 1.0 - x / 6.0 + x * x / 120.0;
    return t * num / den;
  }
  if (x > 0.0) {
    const double u = std::sqrt(x);
    return std::sin(t * u) / std::sin(u);
  }
  const double u = std::sqrt(-x);
  // sinh(tu)/sinh(u) = e^{(t-1)u} (1 - e^{-2tu}) / (1 - e^{-2u}), stable for large u.
  return std::exp((t - 1.0) * u) * (-std::expm1(-2.0 * t * u)) / (-std::expm1(-2.0 * u));
}

// sigma with a dimension parameter n > 0 (tau evaluates it at n = N - 1).
ExtendedReal sigma_raw(double K, double n, double t, double theta) {
  const double k_theta2 = K * theta * theta;
  if (k_theta2 == 0.0) {
    return ExtendedReal(t);
  }
  const double x = k_theta2 / n;
  if (x >= std::numbers::pi * std::numbers::pi) {
    return ExtendedReal::infinity();
  }
  const bool taylor = std::abs(k_theta2) < kTaylorThreshold || std::abs(x) < kTaylorThreshold;
  return ExtendedReal(sine_ratio(x, t, taylor));
}

}  // namespace

DistortionParams::DistortionParams(double K, double N) : K_(K), N_(N) {
  if (!std::isfinite(K)) {
    throw DomainError("distortion: K must be finite");
  }
  if (!(N >= 1.0) || std::isinf(N)) {
    throw DomainError("distortion: N must be finite and >= 1, got " + std::to_string(N));
  }
}

ExtendedReal::ExtendedReal(double value) : value_(value) {
  if (std::isnan(value)) {
    throw DomainError("ExtendedReal: NaN");
  }
  if (std::isinf(value)) {
    if (value < 0) {
      throw DomainError("ExtendedReal: -inf is not representable");
    }
    value_ = 0.0;
    infinite_ = true;
  }
}

double ExtendedReal::value() const {
  if (infinite_) {
    throw DomainError("ExtendedReal: value() on +inf");
  }
  return value_;
}

ExtendedReal ExtendedReal::pow(double p) const {
  if (!(p > 0.0)) {
    throw DomainError("ExtendedReal::pow: exponent must be > 0");
  }
  if (infinite_) {
    return infinity();
  }
  return ExtendedReal(std::pow(value_, p));
}

ExtendedReal operator*(double a, const ExtendedReal& x) {
  if (x.is_infinite()) {
    if (a > 0.0) {
      return ExtendedReal::infinity();
    }
    throw DomainError(a == 0.0 ? "ExtendedReal: 0 * inf is undefined"
                               : "ExtendedReal: negative multiple of +inf");
  }
  return ExtendedReal(a * x.value());
}

ExtendedReal sigma(const DistortionParams& p, double t, double theta) {
  check_t_theta(t, theta);
  return sigma_raw(p.K(), p.N(), t, theta);
}

ExtendedReal tau_from_sigma(double t, const ExtendedReal& s, double N) {
  if (s.is_infinite()) {
    return ExtendedReal::infinity();
  }
  if (s.value() == t) {
    return ExtendedReal(t);
  }
  return ExtendedReal(std::pow(t, 1.0 / N) * std::pow(s.value(), (N - 1.0) / N));
}

ExtendedReal tau(const DistortionParams& p, double t, double theta) {
  check_t_theta(t, theta);
  const double N = p.N();
  const double k_theta2 = p.K() * theta * theta;
  if (N == 1.0) {
    // One-dimensional model: any positive curvature over a nondegenerate
    // distance is infinitely distorting.
    return k_theta2 > 0.0 ? ExtendedReal::infinity() : ExtendedReal(t);
  }
  if (k_theta2 >= (N - 1.0) * std::numbers::pi * std::numbers::pi) {
    return ExtendedReal::infinity();
  }
  return tau_from_sigma(t, sigma_raw(p.K(), N - 1.0, t, theta), N);
}

ExtendedReal varsigma(const DistortionParams& p, double t, double theta) {
  return tau(p, t, theta).pow(p.N());
}

double ode_residual(const DistortionParams& p, double theta, double grid_step) {
  if (!(grid_step > 0.0 && grid_step < 0.5)) {
    throw DomainError("ode_residual: grid_step must lie in (0, 0.5)");
  }
  if (!(theta >= 0.0)) {
    throw DomainError("ode_residual: theta must be >= 0");
  }
  if (p.K() * theta * theta >= p.N() * std::numbers::pi * std::numbers::pi) {
    throw DomainError("ode_residual: supercritical parameters, sigma is not finite");
  }
  const double h = grid_step;
  const double coeff = theta * theta * p.K() / p.N();
  const auto n = static_cast<long>(std::floor(1.0 / h));
  double worst = 0.0;
  for (long i = 1; i < n; ++i) {
    const double t = static_cast<double>(i) * h;
    if (t + h > 1.0) {
      break;
    }
    const double sm = sigma(p, t - h, theta).value();
    const double s0 = sigma(p, t, theta).value();
    const double sp = sigma(p, t + h, theta).value();
    const double r = (sp - 2.0 * s0 + sm) / (h * h) + coeff * s0;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace geodecomp::distortion
