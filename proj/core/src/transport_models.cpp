#include "geodecomp/transport_models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

namespace geodecomp::models {

namespace {

std::string fmt(double x) {
  std::string s = std::to_string(x);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') {
    s.pop_back();
  }
  return s;
}

double unit_ball_volume(int d) {
  const double half = 0.5 * static_cast<double>(d);
  return std::pow(std::numbers::pi, half) / boost::math::tgamma(half + 1.0);
}

// Midpoint nodes of an annulus around `center`. Dimension 1 uses the positive
// segment, dimension 2 a polar grid with weights proportional to r, higher
// dimensions a Cartesian grid clipped to the annulus.
SourceSample annulus_grid(const Point& center, double r_in, double r_out, std::size_t n) {
  const auto d = static_cast<int>(center.size());
  SourceSample out;
  if (n == 0) {
    throw DomainError("source_grid: need at least one node per axis");
  }
  const double dn = static_cast<double>(n);
  if (d == 1) {
    for (std::size_t k = 0; k < n; ++k) {
      const double r = r_in + (static_cast<double>(k) + 0.5) * (r_out - r_in) / dn;
      out.points.push_back(center + Point::Constant(1, r));
      out.weights.push_back(1.0);
    }
  } else if (d == 2) {
    for (std::size_t i = 0; i < n; ++i) {
      const double r = r_in + (static_cast<double>(i) + 0.5) * (r_out - r_in) / dn;
      for (std::size_t j = 0; j < n; ++j) {
        const double th = 2.0 * std::numbers::pi * (static_cast<double>(j) + 0.5) / dn;
        Point p(2);
        p << r * std::cos(th), r * std::sin(th);
        out.points.push_back(center + p);
        out.weights.push_back(r);
      }
    }
  } else {
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    for (;;) {
      Point p(d);
      for (int c = 0; c < d; ++c) {
        p[c] = -r_out + (static_cast<double>(idx[static_cast<std::size_t>(c)]) + 0.5) * 2.0 * r_out / dn;
      }
      const double r = p.norm();
      if (r >= r_in && r <= r_out) {
        out.points.push_back(center + p);
        out.weights.push_back(1.0);
      }
      int c = 0;
      while (c < d && ++idx[static_cast<std::size_t>(c)] == n) {
        idx[static_cast<std::size_t>(c)] = 0;
        ++c;
      }
      if (c == d) {
        break;
      }
    }
  }
  double total = 0.0;
  for (double w : out.weights) {
    total += w;
  }
  for (double& w : out.weights) {
    w /= total;
  }
  return out;
}

bool in_annulus(const Point& center, double r_in, double r_out, const Point& x) {
  if (x.size() != center.size()) {
    return false;
  }
  if (x.size() == 1) {
    const double r = x[0] - center[0];
    return r >= r_in && r <= r_out;
  }
  const double r = (x - center).norm();
  return r >= r_in && r <= r_out;
}

double annulus_volume(int d, double r_in, double r_out) {
  if (d == 1) {
    return r_out - r_in;
  }
  return unit_ball_volume(d) * (std::pow(r_out, d) - std::pow(r_in, d));
}

Box centered_box(const Point& center, double half_width) {
  const auto d = center.size();
  if (d == 1) {
    return {center, center + Point::Constant(1, half_width)};
  }
  return {center - Point::Constant(d, half_width), center + Point::Constant(d, half_width)};
}

class Translation final : public TransportModel {
 public:
  Translation(int dim, Point v, Point lo, Point hi)
      : TransportModel(spaces::ModelSpace::euclidean(dim)), v_(std::move(v)), lo_(std::move(lo)), hi_(std::move(hi)) {
    if (v_.size() != dim || lo_.size() != dim || hi_.size() != dim) {
      throw DomainError("translation: v, lo, hi must have the space dimension");
    }
    if (!(v_.norm() > 0.0)) {
      throw DomainError("translation: v must be nonzero");
    }
    volume_ = 1.0;
    for (int c = 0; c < dim; ++c) {
      if (!(lo_[c] < hi_[c])) {
        throw DomainError("translation: need lo < hi in every coordinate");
      }
      volume_ *= hi_[c] - lo_[c];
    }
  }

  std::string name() const override { return "translation"; }
  double phi(const Point& x) const override { return v_.dot(x); }
  Point grad_phi(const Point&) const override { return v_; }
  Matrix hess_phi(const Point& x) const override { return Matrix::Zero(x.size(), x.size()); }
  double phi_c(const Point& y) const override { return -v_.dot(y) - 0.5 * v_.squaredNorm(); }
  double rho0(const Point& x) const override { return in_source_support(x) ? 1.0 / volume_ : 0.0; }
  bool in_source_support(const Point& x) const override { return Box{lo_, hi_}.contains(x); }
  Box support_box(double t) const override { return {lo_ - t * v_, hi_ - t * v_}; }
  std::optional<Point> source_of(double t, const Point& z) const override {
    Point x = z + t * v_;
    if (!in_source_support(x)) {
      return std::nullopt;
    }
    return x;
  }
  SourceSample source_grid(std::size_t n) const override {
    const int d = dim();
    SourceSample out;
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    for (;;) {
      Point p(d);
      for (int c = 0; c < d; ++c) {
        p[c] = lo_[c] + (static_cast<double>(idx[static_cast<std::size_t>(c)]) + 0.5) * (hi_[c] - lo_[c]) /
                            static_cast<double>(n);
      }
      out.points.push_back(p);
      int c = 0;
      while (c < d && ++idx[static_cast<std::size_t>(c)] == n) {
        idx[static_cast<std::size_t>(c)] = 0;
        ++c;
      }
      if (c == d) {
        break;
      }
    }
    out.weights.assign(out.points.size(), 1.0 / static_cast<double>(out.points.size()));
    return out;
  }

 private:
  Point v_;
  Point lo_;
  Point hi_;
  double volume_;
};

class Dilation final : public TransportModel {
 public:
  Dilation(int dim, double alpha, double r_in, double r_out)
      : TransportModel(spaces::ModelSpace::euclidean(dim)), alpha_(alpha), r_in_(r_in), r_out_(r_out) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw DomainError("dilation: alpha must lie in (0,1)");
    }
    if (!(r_in > 0.0 && r_in < r_out)) {
      throw DomainError("dilation: need 0 < r_in < r_out");
    }
    volume_ = annulus_volume(dim, r_in, r_out);
  }

  std::string name() const override { return "dilation(alpha=" + fmt(alpha_) + ")"; }
  double phi(const Point& x) const override { return 0.5 * alpha_ * x.squaredNorm(); }
  Point grad_phi(const Point& x) const override { return alpha_ * x; }
  Matrix hess_phi(const Point& x) const override { return alpha_ * Matrix::Identity(x.size(), x.size()); }
  double phi_c(const Point& y) const override { return -alpha_ * y.squaredNorm() / (2.0 * (1.0 - alpha_)); }
  double rho0(const Point& x) const override { return in_source_support(x) ? 1.0 / volume_ : 0.0; }
  bool in_source_support(const Point& x) const override {
    return in_annulus(Point::Zero(dim()), r_in_, r_out_, x);
  }
  Box support_box(double t) const override {
    const double s = 1.0 - t * alpha_;
    if (dim() == 1) {
      return {Point::Constant(1, s * r_in_), Point::Constant(1, s * r_out_)};
    }
    return centered_box(Point::Zero(dim()), s * r_out_);
  }
  std::optional<Point> source_of(double t, const Point& z) const override {
    Point x = z / (1.0 - t * alpha_);
    if (!in_source_support(x)) {
      return std::nullopt;
    }
    return x;
  }
  SourceSample source_grid(std::size_t n) const override {
    return annulus_grid(Point::Zero(dim()), r_in_, r_out_, n);
  }

 private:
  double alpha_;
  double r_in_;
  double r_out_;
  double volume_;
};

class RadialToPoint final : public TransportModel {
 public:
  RadialToPoint(Point A, double r_in, double r_out)
      : TransportModel(spaces::ModelSpace::euclidean(static_cast<int>(A.size()))),
        A_(std::move(A)),
        r_in_(r_in),
        r_out_(r_out) {
    if (!(r_in > 0.0 && r_in < r_out)) {
      throw DomainError("radial_to_point: need 0 < r_in < r_out");
    }
    volume_ = annulus_volume(dim(), r_in, r_out);
  }

  std::string name() const override { return "radial_to_point"; }
  double phi(const Point& x) const override { return 0.5 * (x - A_).squaredNorm(); }
  Point grad_phi(const Point& x) const override { return x - A_; }
  Matrix hess_phi(const Point& x) const override { return Matrix::Identity(x.size(), x.size()); }
  // c-transform over the source support: 1/2|y-A|^2 - sup_x <x - A, y - A>.
  double phi_c(const Point& y) const override {
    const Point u = y - A_;
    double sup = 0.0;
    if (u.size() == 1) {
      sup = u[0] > 0.0 ? r_out_ * u[0] : r_in_ * u[0];
    } else {
      sup = r_out_ * u.norm();
    }
    return 0.5 * u.squaredNorm() - sup;
  }
  double rho0(const Point& x) const override { return in_source_support(x) ? 1.0 / volume_ : 0.0; }
  bool in_source_support(const Point& x) const override { return in_annulus(A_, r_in_, r_out_, x); }
  Box support_box(double t) const override {
    const double s = 1.0 - t;
    if (dim() == 1) {
      return {A_ + Point::Constant(1, s * r_in_), A_ + Point::Constant(1, s * r_out_)};
    }
    return centered_box(A_, s * r_out_);
  }
  std::optional<Point> source_of(double t, const Point& z) const override {
    if (t >= 1.0) {
      return std::nullopt;
    }
    Point x = A_ + (z - A_) / (1.0 - t);
    if (!in_source_support(x)) {
      return std::nullopt;
    }
    return x;
  }
  SourceSample source_grid(std::size_t n) const override { return annulus_grid(A_, r_in_, r_out_, n); }

 private:
  Point A_;
  double r_in_;
  double r_out_;
  double volume_;
};

class Reversal1D final : public TransportModel {
 public:
  Reversal1D(double beta, double c, double lo, double hi)
      : TransportModel(spaces::ModelSpace::euclidean(1)), beta_(beta), c_(c), lo_(lo), hi_(hi) {
    if (!(beta > 0.0)) {
      throw DomainError("reversal_1d: beta must be > 0");
    }
    if (!(lo < hi)) {
      throw DomainError("reversal_1d: need lo < hi");
    }
  }

  std::string name() const override { return "reversal_1d(beta=" + fmt(beta_) + ")"; }
  double phi(const Point& x) const override { return 0.5 * (1.0 + beta_) * x[0] * x[0] - c_ * x[0]; }
  Point grad_phi(const Point& x) const override { return Point::Constant(1, (1.0 + beta_) * x[0] - c_); }
  Matrix hess_phi(const Point&) const override { return Matrix::Constant(1, 1, 1.0 + beta_); }
  // Pairing value c(T^{-1}(y), y) - phi(T^{-1}(y)); T is not optimal, so this
  // is not the c-transform of phi.
  double phi_c(const Point& y) const override {
    const Point x = Point::Constant(1, (c_ - y[0]) / beta_);
    return 0.5 * (x - y).squaredNorm() - phi(x);
  }
  double rho0(const Point& x) const override { return in_source_support(x) ? 1.0 / (hi_ - lo_) : 0.0; }
  bool in_source_support(const Point& x) const override { return x[0] >= lo_ && x[0] <= hi_; }
  Box support_box(double t) const override {
    const double a = eval(Point::Constant(1, lo_), t)[0];
    const double b = eval(Point::Constant(1, hi_), t)[0];
    return {Point::Constant(1, std::min(a, b)), Point::Constant(1, std::max(a, b))};
  }
  std::optional<Point> source_of(double t, const Point& z) const override {
    const double den = 1.0 - t * (1.0 + beta_);
    if (std::abs(den) < 1e-14) {
      return std::nullopt;
    }
    Point x = Point::Constant(1, (z[0] - t * c_) / den);
    if (!in_source_support(x)) {
      return std::nullopt;
    }
    return x;
  }
  SourceSample source_grid(std::size_t n) const override {
    SourceSample out;
    for (std::size_t k = 0; k < n; ++k) {
      out.points.push_back(Point::Constant(1, lo_ + (static_cast<double>(k) + 0.5) * (hi_ - lo_) / static_cast<double>(n)));
    }
    out.weights.assign(n, 1.0 / static_cast<double>(n));
    return out;
  }

 private:
  double beta_;
  double c_;
  double lo_;
  double hi_;
};

class Quantile1D final : public TransportModel {
 public:
  Quantile1D(const spaces::ModelSpace& space, double p0, double q0, double p1, double q1, std::size_t cells)
      : TransportModel(space),
        d0_(p0, q0, [s = space](double x) { return s.weight(x); }, cells),
        d1_(p1, q1, [s = space](double x) { return s.weight(x); }, cells) {
    if (space.kind() != spaces::SpaceKind::Interval1D) {
      throw DomainError("quantile_1d: requires an interval space");
    }
    if (p0 < space.lo() || q0 > space.hi() || p1 < space.lo() || q1 > space.hi()) {
      throw DomainError("quantile_1d: marginal supports must lie in the space");
    }
    // Hermite table of T with exact slopes; the cubic error is below double
    // precision at this spacing, and evaluation avoids nested root solves.
    const std::size_t knots = 8 * cells;
    knot_step_ = (q0 - p0) / static_cast<double>(knots);
    knot_T_.resize(knots + 1);
    knot_D_.resize(knots + 1);
    for (std::size_t k = 0; k <= knots; ++k) {
      const double x = k == knots ? q0 : p0 + static_cast<double>(k) * knot_step_;
      knot_T_[k] = d1_.quantile(d0_.cdf(x));
      knot_D_[k] = d0_.pdf(x) / d1_.pdf(knot_T_[k]);
    }
    // Cumulative table of phi(x) = int_{p0}^x (u - T(u)) du.
    phi_table_.assign(cells + 1, 0.0);
    cell_ = (q0 - p0) / static_cast<double>(cells);
    auto integrand = [this](double u) { return u - map_scalar(u); };
    for (std::size_t k = 0; k < cells; ++k) {
      const double a = p0 + static_cast<double>(k) * cell_;
      const double b = (k + 1 == cells) ? q0 : a + cell_;
      phi_table_[k + 1] = phi_table_[k] + boost::math::quadrature::gauss<double, 15>::integrate(integrand, a, b);
    }
  }

  std::string name() const override { return "quantile_1d(" + space().name() + ")"; }

  double map_scalar(double x) const {
    const double u = std::clamp(x, d0_.lo(), d0_.hi());
    const std::size_t last = knot_T_.size() - 1;
    const auto k = std::min(static_cast<std::size_t>((u - d0_.lo()) / knot_step_), last - 1);
    const double h = knot_step_;
    const double s = (u - (d0_.lo() + static_cast<double>(k) * h)) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * knot_T_[k] + (s3 - 2 * s2 + s) * h * knot_D_[k] + (-2 * s3 + 3 * s2) * knot_T_[k + 1] +
           (s3 - s2) * h * knot_D_[k + 1];
  }
  double map_derivative(double x) const { return d0_.pdf(x) / d1_.pdf(map_scalar(x)); }

  double phi(const Point& x) const override {
    const double u = std::clamp(x[0], d0_.lo(), d0_.hi());
    const std::size_t cells = phi_table_.size() - 1;
    auto k = static_cast<std::size_t>((u - d0_.lo()) / cell_);
    k = std::min(k, cells - 1);
    const double a = d0_.lo() + static_cast<double>(k) * cell_;
    auto integrand = [this](double s) { return s - map_scalar(s); };
    const double part = u > a ? boost::math::quadrature::gauss<double, 15>::integrate(integrand, a, u) : 0.0;
    return phi_table_[k] + part;
  }
  Point grad_phi(const Point& x) const override { return Point::Constant(1, x[0] - map_scalar(x[0])); }
  Matrix hess_phi(const Point& x) const override { return Matrix::Constant(1, 1, 1.0 - map_derivative(x[0])); }
  double phi_c(const Point& y) const override {
    const Point x = Point::Constant(1, d0_.quantile(d1_.cdf(y[0])));
    return 0.5 * (x - y).squaredNorm() - phi(x);
  }
  double rho0(const Point& x) const override { return in_source_support(x) ? 1.0 / d0_.mass() : 0.0; }
  bool in_source_support(const Point& x) const override { return x[0] >= d0_.lo() && x[0] <= d0_.hi(); }
  Box support_box(double t) const override {
    return {Point::Constant(1, (1.0 - t) * d0_.lo() + t * d1_.lo()), Point::Constant(1, (1.0 - t) * d0_.hi() + t * d1_.hi())};
  }
  std::optional<Point> source_of(double t, const Point& z) const override {
    auto f = [&](double x) { return (1.0 - t) * x + t * map_scalar(x) - z[0]; };
    const double a = d0_.lo();
    const double b = d0_.hi();
    const double fa = f(a);
    const double fb = f(b);
    if (fa > 0.0 || fb < 0.0) {
      return std::nullopt;
    }
    if (fa == 0.0) {
      return Point::Constant(1, a);
    }
    if (fb == 0.0) {
      return Point::Constant(1, b);
    }
    // Narrow the bracket to one knot cell; e_t is increasing on the knots.
    const double h = knot_step_;
    auto knot_x = [&](std::size_t k) { return k + 1 == knot_T_.size() ? b : a + static_cast<double>(k) * h; };
    std::size_t lo = 0;
    std::size_t hi = knot_T_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if ((1.0 - t) * knot_x(mid) + t * knot_T_[mid] - z[0] <= 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    double xa = knot_x(lo);
    double xb = knot_x(hi);
    double ya = f(xa);
    double yb = f(xb);
    if (ya > 0.0 || yb < 0.0) {
      xa = a;
      xb = b;
      ya = fa;
      yb = fb;
    }
    if (ya == 0.0) {
      return Point::Constant(1, xa);
    }
    if (yb == 0.0) {
      return Point::Constant(1, xb);
    }
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, xa, xb, ya, yb, boost::math::tools::eps_tolerance<double>(52), iters);
    return Point::Constant(1, 0.5 * (r.first + r.second));
  }
  SourceSample source_grid(std::size_t n) const override {
    SourceSample out;
    for (std::size_t k = 0; k < n; ++k) {
      out.points.push_back(Point::Constant(1, d0_.quantile((static_cast<double>(k) + 0.5) / static_cast<double>(n))));
    }
    out.weights.assign(n, 1.0 / static_cast<double>(n));
    return out;
  }

  const spaces::Density1D& source_density() const { return d0_; }
  const spaces::Density1D& target_density() const { return d1_; }

 private:
  spaces::Density1D d0_;
  spaces::Density1D d1_;
  std::vector<double> phi_table_;
  double cell_ = 0.0;
  std::vector<double> knot_T_;
  std::vector<double> knot_D_;
  double knot_step_ = 0.0;
};

}  // namespace

double Box::volume() const {
  double v = 1.0;
  for (Eigen::Index c = 0; c < lo.size(); ++c) {
    v *= hi[c] - lo[c];
  }
  return v;
}

bool Box::contains(const Point& x) const {
  if (x.size() != lo.size()) {
    return false;
  }
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    if (x[c] < lo[c] || x[c] > hi[c]) {
      return false;
    }
  }
  return true;
}

Box Box::hull(const Box& a, const Box& b) {
  return {a.lo.cwiseMin(b.lo), a.hi.cwiseMax(b.hi)};
}

TransportModel::TransportModel(spaces::ModelSpace space) : space_(std::move(space)) {}

Matrix TransportModel::map_jacobian(const Point& x) const {
  return Matrix::Identity(x.size(), x.size()) - hess_phi(x);
}

Point TransportModel::eval(const Point& x, double t) const {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("TransportModel::eval: t must lie in [0,1]");
  }
  return x - t * grad_phi(x);
}

spaces::TransportMap TransportModel::transport_map() const {
  return {[this](const Point& x) { return map(x); }, [this](const Point& x) { return map_jacobian(x); }};
}

double TransportModel::rho_t(const Point& x, double t) const {
  return spaces::interpolant_density(
      space_, [this](const Point& p) { return rho0(p); }, transport_map(), t, x);
}

double TransportModel::Phi(double t, const Point& z) const {
  const auto x = source_of(t, z);
  if (!x) {
    throw DomainError("TransportModel::Phi: point is not in e_t(support)");
  }
  return phi(*x);
}

double TransportModel::inv_lambda(const Point& x, double t) const {
  const auto d = x.size();
  const Matrix J = Matrix::Identity(d, d) - t * hess_phi(x);
  const Point g = grad_phi(x);
  Eigen::FullPivLU<Matrix> lu(J);
  if (!lu.isInvertible()) {
    return std::numeric_limits<double>::infinity();
  }
  return lu.solve(g).dot(g);
}

std::unique_ptr<TransportModel> make_translation(int dim, Point v, Point lo, Point hi) {
  return std::make_unique<Translation>(dim, std::move(v), std::move(lo), std::move(hi));
}

std::unique_ptr<TransportModel> make_dilation(int dim, double alpha, double r_in, double r_out) {
  return std::make_unique<Dilation>(dim, alpha, r_in, r_out);
}

std::unique_ptr<TransportModel> make_radial_to_point(Point A, double r_in, double r_out) {
  return std::make_unique<RadialToPoint>(std::move(A), r_in, r_out);
}

std::unique_ptr<TransportModel> make_reversal_1d(double beta, double c, double lo, double hi) {
  return std::make_unique<Reversal1D>(beta, c, lo, hi);
}

std::unique_ptr<TransportModel> make_quantile_1d(const spaces::ModelSpace& space, double p0, double q0, double p1,
                                                 double q1, std::size_t cells) {
  return std::make_unique<Quantile1D>(space, p0, q0, p1, q1, cells);
}

}  // namespace geodecomp::models
