#include "geodecomp/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

namespace geodecomp::spaces {

ModelSpace ModelSpace::euclidean(int dim, ScalarField log_density, std::string name) {
  if (dim < 1) {
    throw DomainError("ModelSpace::euclidean: dim must be >= 1");
  }
  ModelSpace s;
  s.kind_ = SpaceKind::EuclideanWeighted;
  s.dim_ = dim;
  s.log_density_ = std::move(log_density);
  s.name_ = std::move(name);
  return s;
}

ModelSpace ModelSpace::interval(double lo, double hi, std::function<double(double)> density, std::string name) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw DomainError("ModelSpace::interval: need finite lo < hi");
  }
  if (!density) {
    throw DomainError("ModelSpace::interval: density handle is empty");
  }
  ModelSpace s;
  s.kind_ = SpaceKind::Interval1D;
  s.dim_ = 1;
  s.lo_ = lo;
  s.hi_ = hi;
  s.density_1d_ = std::move(density);
  s.name_ = std::move(name);
  return s;
}

ModelSpace ModelSpace::sine_power(double N) {
  if (!(N >= 1.0)) {
    throw DomainError("ModelSpace::sine_power: N must be >= 1");
  }
  return interval(
      0.0, std::numbers::pi, [N](double x) { return std::pow(std::sin(x), N - 1.0); },
      "sine_power(N=" + std::to_string(N) + ")");
}

ModelSpace ModelSpace::cone(double N) {
  if (!(N >= 1.0)) {
    throw DomainError("ModelSpace::cone: N must be >= 1");
  }
  return interval(
      0.0, 1.0, [N](double x) { return std::pow(x, N - 1.0); }, "cone(N=" + std::to_string(N) + ")");
}

double ModelSpace::lo() const {
  if (kind_ != SpaceKind::Interval1D) {
    throw DomainError("ModelSpace::lo: not an interval");
  }
  return lo_;
}

double ModelSpace::hi() const {
  if (kind_ != SpaceKind::Interval1D) {
    throw DomainError("ModelSpace::hi: not an interval");
  }
  return hi_;
}

double ModelSpace::weight(const Point& x) const {
  if (x.size() != dim_) {
    throw DomainError("ModelSpace::weight: dimension mismatch");
  }
  if (kind_ == SpaceKind::Interval1D) {
    return weight(x[0]);
  }
  return log_density_ ? std::exp(log_density_(x)) : 1.0;
}

double ModelSpace::weight(double x) const {
  if (kind_ != SpaceKind::Interval1D) {
    Point p(1);
    p[0] = x;
    return weight(p);
  }
  if (x < lo_ || x > hi_) {
    return 0.0;
  }
  return density_1d_(x);
}

bool ModelSpace::contains(const Point& x) const {
  if (x.size() != dim_ || !x.allFinite()) {
    return false;
  }
  if (kind_ == SpaceKind::Interval1D) {
    return x[0] >= lo_ && x[0] <= hi_;
  }
  return true;
}

double ModelSpace::distance(const Point& x, const Point& y) const {
  if (x.size() != dim_ || y.size() != dim_) {
    throw DomainError("ModelSpace::distance: dimension mismatch");
  }
  return (x - y).norm();
}

Geodesic::Geodesic(Point x0, Point x1) : x0_(std::move(x0)), x1_(std::move(x1)) {
  if (x0_.size() != x1_.size()) {
    throw DomainError("Geodesic: endpoint dimensions differ");
  }
  length_ = (x1_ - x0_).norm();
}

Point eval(const Geodesic& g, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("eval: t must lie in [0,1], got " + std::to_string(t));
  }
  if (t == 0.0) {
    return g.x0();
  }
  if (t == 1.0) {
    return g.x1();
  }
  return (1.0 - t) * g.x0() + t * g.x1();
}

DynamicalPlan::DynamicalPlan(std::vector<Geodesic> geodesics, std::vector<double> weights)
    : geodesics_(std::move(geodesics)), weights_(std::move(weights)) {
  if (geodesics_.empty()) {
    throw DomainError("DynamicalPlan: no geodesics");
  }
  if (geodesics_.size() != weights_.size()) {
    throw DomainError("DynamicalPlan: geodesics and weights differ in length");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) {
      throw DomainError("DynamicalPlan: negative weight");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-10) {
    throw DomainError("DynamicalPlan: weights sum to " + std::to_string(total));
  }
  // Distinct endpoint pairs; sort indices to keep this O(n log n).
  std::vector<std::size_t> order(geodesics_.size());
  std::iota(order.begin(), order.end(), 0);
  auto key_less = [this](std::size_t a, std::size_t b) {
    const auto& ga = geodesics_[a];
    const auto& gb = geodesics_[b];
    const auto less_vec = [](const Point& p, const Point& q) {
      return std::lexicographical_compare(p.data(), p.data() + p.size(), q.data(), q.data() + q.size());
    };
    if (ga.x0() != gb.x0()) {
      return less_vec(ga.x0(), gb.x0());
    }
    return less_vec(ga.x1(), gb.x1());
  };
  std::sort(order.begin(), order.end(), key_less);
  for (std::size_t k = 1; k < order.size(); ++k) {
    const auto& a = geodesics_[order[k - 1]];
    const auto& b = geodesics_[order[k]];
    if (a.x0() == b.x0() && a.x1() == b.x1()) {
      throw DomainError("DynamicalPlan: repeated endpoint pair");
    }
  }
}

ot::DiscreteMeasure DynamicalPlan::evaluate_measure(double t) const {
  std::vector<Point> pts;
  pts.reserve(geodesics_.size());
  for (const auto& g : geodesics_) {
    pts.push_back(eval(g, t));
  }
  double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  std::vector<double> w(weights_);
  for (double& x : w) {
    x /= total;
  }
  return ot::DiscreteMeasure(std::move(pts), std::move(w));
}

DynamicalPlan plan_from_coupling(const ot::Coupling& c, const ot::DiscreteMeasure& mu,
                                 const ot::DiscreteMeasure& nu, const ModelSpace& space, LengthBounds bounds) {
  std::vector<Geodesic> gs;
  std::vector<double> ws;
  for (const auto& e : c.entries) {
    if (!(e.mass > 0.0)) {
      continue;
    }
    const Point& x = mu.point(e.source);
    const Point& y = nu.point(e.target);
    if (!space.contains(x) || !space.contains(y)) {
      throw DomainError("plan_from_coupling: coupling entry outside the space");
    }
    Geodesic g(x, y);
    if (bounds.C > 0.0 && !(g.length() > 1.0 / bounds.C && g.length() < bounds.C)) {
      throw DomainError("plan_from_coupling: geodesic length " + std::to_string(g.length()) +
                        " outside (1/C, C) with C = " + std::to_string(bounds.C));
    }
    gs.push_back(std::move(g));
    ws.push_back(e.mass);
  }
  const double total = std::accumulate(ws.begin(), ws.end(), 0.0);
  for (double& w : ws) {
    w /= total;
  }
  return DynamicalPlan(std::move(gs), std::move(ws));
}

Density1D::Density1D(double lo, double hi, std::function<double(double)> density, std::size_t cells)
    : lo_(lo), hi_(hi), density_(std::move(density)) {
  if (!(lo < hi)) {
    throw DomainError("Density1D: need lo < hi");
  }
  if (cells == 0) {
    throw DomainError("Density1D: need at least one cell");
  }
  cumulative_.assign(cells + 1, 0.0);
  const double h = (hi_ - lo_) / static_cast<double>(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    const double a = lo_ + static_cast<double>(k) * h;
    const double b = (k + 1 == cells) ? hi_ : a + h;
    const double piece = boost::math::quadrature::gauss<double, 15>::integrate(density_, a, b);
    if (!(piece >= 0.0)) {
      throw DomainError("Density1D: density is negative or not finite");
    }
    cumulative_[k + 1] = cumulative_[k] + piece;
  }
  total_ = cumulative_.back();
  if (!(total_ > 0.0)) {
    throw DomainError("Density1D: density has zero mass");
  }
}

double Density1D::pdf(double x) const {
  if (x < lo_ || x > hi_) {
    return 0.0;
  }
  return density_(x) / total_;
}

double Density1D::partial(std::size_t cell, double x) const {
  const std::size_t cells = cumulative_.size() - 1;
  const double h = (hi_ - lo_) / static_cast<double>(cells);
  const double a = lo_ + static_cast<double>(cell) * h;
  if (x <= a) {
    return 0.0;
  }
  return boost::math::quadrature::gauss<double, 15>::integrate(density_, a, x);
}

double Density1D::cdf(double x) const {
  if (x <= lo_) {
    return 0.0;
  }
  if (x >= hi_) {
    return 1.0;
  }
  const std::size_t cells = cumulative_.size() - 1;
  const double h = (hi_ - lo_) / static_cast<double>(cells);
  auto cell = static_cast<std::size_t>((x - lo_) / h);
  cell = std::min(cell, cells - 1);
  return std::min(1.0, (cumulative_[cell] + partial(cell, x)) / total_);
}

double Density1D::quantile(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw DomainError("Density1D::quantile: q must lie in [0,1]");
  }
  if (q == 0.0) {
    return lo_;
  }
  if (q == 1.0) {
    return hi_;
  }
  const double target = q * total_;
  const std::size_t cells = cumulative_.size() - 1;
  const double h = (hi_ - lo_) / static_cast<double>(cells);
  // First cell whose right edge reaches the target mass.
  const auto it = std::lower_bound(cumulative_.begin() + 1, cumulative_.end(), target);
  const auto cell = static_cast<std::size_t>(std::distance(cumulative_.begin() + 1, it));
  const double a = lo_ + static_cast<double>(cell) * h;
  const double b = (cell + 1 == cells) ? hi_ : a + h;
  auto f = [&](double x) { return cumulative_[cell] + partial(cell, x) - target; };
  const double fa = f(a);
  const double fb = cumulative_[cell + 1] - target;
  if (fa >= 0.0) {
    return a;
  }
  if (fb <= 0.0) {
    return b;
  }
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(52),
                                                   iters);
  return 0.5 * (r.first + r.second);
}

QuantilePlan quantile_coupling(const Density1D& mu, const Density1D& nu, std::size_t n_quantiles) {
  if (n_quantiles == 0) {
    throw DomainError("quantile_coupling: need at least one quantile");
  }
  std::vector<Point> xs;
  std::vector<Point> ys;
  xs.reserve(n_quantiles);
  ys.reserve(n_quantiles);
  for (std::size_t k = 0; k < n_quantiles; ++k) {
    const double q = (static_cast<double>(k) + 0.5) / static_cast<double>(n_quantiles);
    xs.push_back(Point::Constant(1, mu.quantile(q)));
    ys.push_back(Point::Constant(1, nu.quantile(q)));
  }
  auto source = ot::DiscreteMeasure::uniform(std::move(xs));
  auto target = ot::DiscreteMeasure::uniform(std::move(ys));
  auto coupling = monotone_coupling(source, target);
  return QuantilePlan{std::move(source), std::move(target), std::move(coupling)};
}

ot::Coupling monotone_coupling(const ot::DiscreteMeasure& mu, const ot::DiscreteMeasure& nu) {
  if (mu.dim() != 1 || nu.dim() != 1) {
    throw DomainError("monotone_coupling: measures must live on the line");
  }
  const std::size_t n = mu.size();
  const std::size_t m = nu.size();
  std::vector<std::size_t> ix(n);
  std::vector<std::size_t> jx(m);
  std::iota(ix.begin(), ix.end(), 0);
  std::iota(jx.begin(), jx.end(), 0);
  std::sort(ix.begin(), ix.end(), [&](std::size_t a, std::size_t b) { return mu.point(a)[0] < mu.point(b)[0]; });
  std::sort(jx.begin(), jx.end(), [&](std::size_t a, std::size_t b) { return nu.point(a)[0] < nu.point(b)[0]; });

  const auto cost = ot::half_squared_distance();
  ot::Coupling out;
  std::vector<double> phi(n, 0.0);
  std::vector<double> psi(m, 0.0);

  // North-west corner rule on the sorted supports. The staircase support is a
  // spanning tree, so complementary slackness fixes the duals along it.
  std::size_t a = 0;
  std::size_t b = 0;
  double ra = mu.weight(ix[0]);
  double rb = nu.weight(jx[0]);
  phi[ix[0]] = 0.0;
  psi[jx[0]] = cost(mu.point(ix[0]), nu.point(jx[0]));
  for (;;) {
    const double f = std::min(ra, rb);
    const std::size_t i = ix[a];
    const std::size_t j = jx[b];
    if (f > 0.0) {
      out.entries.push_back({i, j, f});
      out.cost_total += f * cost(mu.point(i), nu.point(j));
    }
    ra -= f;
    rb -= f;
    const bool next_a = ra <= 1e-15 && a + 1 < n;
    const bool next_b = rb <= 1e-15 && b + 1 < m;
    if (!next_a && !next_b) {
      break;
    }
    if (next_a) {
      ++a;
      ra += mu.weight(ix[a]);
      phi[ix[a]] = cost(mu.point(ix[a]), nu.point(jx[b])) - psi[jx[b]];
    }
    if (next_b) {
      ++b;
      rb += nu.weight(jx[b]);
      psi[jx[b]] = cost(mu.point(ix[a]), nu.point(jx[b])) - phi[ix[a]];
    }
  }

  // Double c-transform for exact feasibility, then fix the gauge.
  psi = ot::c_transform(phi, mu.points(), nu.points(), cost);
  phi = ot::c_transform(psi, nu.points(), mu.points(), [&cost](const Point& y, const Point& x) { return cost(x, y); });
  const double gauge = phi[0];
  for (double& p : phi) {
    p -= gauge;
  }
  for (double& p : psi) {
    p += gauge;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.dual_total += mu.weight(i) * phi[i];
  }
  for (std::size_t j = 0; j < m; ++j) {
    out.dual_total += nu.weight(j) * psi[j];
  }
  out.dual_source = std::move(phi);
  out.dual_target = std::move(psi);
  return out;
}

double interpolant_density(const ModelSpace& space, const ScalarField& rho0, const TransportMap& T, double t,
                           const Point& x) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("interpolant_density: t must lie in [0,1]");
  }
  const double r0 = rho0(x);
  if (t == 0.0) {
    return r0;
  }
  const auto d = x.size();
  const Matrix J = (1.0 - t) * Matrix::Identity(d, d) + t * T.jacobian(x);
  const double det = std::abs(J.determinant());
  const Point xt = (1.0 - t) * x + t * T.map(x);
  const double wt = space.weight(xt);
  if (det == 0.0 || wt == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return r0 * space.weight(x) / (wt * det);
}

}  // namespace geodecomp::spaces
