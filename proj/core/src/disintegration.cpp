#include "geodecomp/disintegration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include <boost/math/tools/roots.hpp>

namespace geodecomp::disint {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Upper bound of f on a box from a grid scan, padded by 5%.
double scan_bound(const models::Box& box, const std::function<double(const Point&)>& f) {
  const auto d = box.lo.size();
  const std::size_t per_axis = d == 1 ? 1024 : (d == 2 ? 64 : 12);
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  double best = 0.0;
  bool constant = true;
  double first = -1.0;
  for (;;) {
    Point p(d);
    for (Eigen::Index c = 0; c < d; ++c) {
      p[c] = box.lo[c] + (box.hi[c] - box.lo[c]) * static_cast<double>(idx[static_cast<std::size_t>(c)]) /
                             static_cast<double>(per_axis - 1);
    }
    const double v = f(p);
    if (first < 0.0) {
      first = v;
    } else if (v != first) {
      constant = false;
    }
    best = std::max(best, v);
    Eigen::Index c = 0;
    while (c < d && ++idx[static_cast<std::size_t>(c)] == per_axis) {
      idx[static_cast<std::size_t>(c)] = 0;
      ++c;
    }
    if (c == d) {
      break;
    }
  }
  return constant ? best : 1.05 * best;
}

Point uniform_in(RandomStream& rng, const models::Box& box) {
  Point p(box.lo.size());
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    p[c] = rng.uniform(box.lo[c], box.hi[c]);
  }
  return p;
}

}  // namespace

std::vector<LevelClass> partition_levels(const spaces::DynamicalPlan& plan, const std::vector<double>& phi0,
                                         std::size_t n_bins) {
  if (n_bins == 0) {
    throw DomainError("partition_levels: n_bins must be >= 1");
  }
  if (phi0.size() != plan.size()) {
    throw DomainError("partition_levels: potential samples do not match the plan");
  }
  const auto [lo_it, hi_it] = std::minmax_element(phi0.begin(), phi0.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double width = hi > lo ? (hi - lo) / static_cast<double>(n_bins) : 1.0;
  std::vector<LevelClass> bins(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    bins[k].a = hi > lo ? lo + (static_cast<double>(k) + 0.5) * width : lo;
    bins[k].half_width = hi > lo ? 0.5 * width : 0.0;
  }
  for (std::size_t i = 0; i < plan.size(); ++i) {
    std::size_t k = 0;
    if (hi > lo) {
      k = std::min(n_bins - 1, static_cast<std::size_t>(std::floor((phi0[i] - lo) / width)));
    }
    bins[k].members.push_back(i);
    bins[k].weight += plan.weight(i);
  }
  std::vector<LevelClass> out;
  for (auto& b : bins) {
    if (!b.members.empty()) {
      out.push_back(std::move(b));
    }
  }
  return out;
}

std::vector<LevelClass> group_levels(const spaces::DynamicalPlan& plan, const std::vector<double>& phi0,
                                     double tol) {
  if (phi0.size() != plan.size()) {
    throw DomainError("group_levels: potential samples do not match the plan");
  }
  std::vector<std::size_t> order(phi0.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return phi0[i] < phi0[j]; });
  std::vector<LevelClass> out;
  std::size_t k = 0;
  while (k < order.size()) {
    std::size_t end = k + 1;
    while (end < order.size() &&
           phi0[order[end]] - phi0[order[end - 1]] <= tol * (1.0 + std::abs(phi0[order[end]]))) {
      ++end;
    }
    LevelClass c;
    double sum = 0.0;
    for (std::size_t q = k; q < end; ++q) {
      c.members.push_back(order[q]);
      c.weight += plan.weight(order[q]);
      sum += phi0[order[q]];
    }
    c.a = sum / static_cast<double>(end - k);
    c.half_width = 0.5 * (phi0[order[end - 1]] - phi0[order[k]]);
    std::sort(c.members.begin(), c.members.end());
    out.push_back(std::move(c));
    k = end;
  }
  return out;
}

PartitionReport check_partition(const spaces::DynamicalPlan& plan, const LevelClass& cls,
                                const std::vector<double>& s_grid, double tol) {
  struct Sample {
    std::size_t member;
    double s;
    Point p;
  };
  std::vector<Sample> pts;
  for (std::size_t i : cls.members) {
    for (double s : s_grid) {
      pts.push_back({i, s, spaces::eval(plan.geodesic(i), s)});
    }
  }
  PartitionReport r;
  r.min_distance = kInf;
  for (std::size_t p = 0; p < pts.size(); ++p) {
    for (std::size_t q = p + 1; q < pts.size(); ++q) {
      if (pts[p].s == pts[q].s && (pts[p].s == 0.0 || pts[p].s == 1.0)) {
        continue;
      }
      if (pts[p].s == pts[q].s && pts[p].member == pts[q].member) {
        continue;
      }
      ++r.comparisons;
      r.min_distance = std::min(r.min_distance, (pts[p].p - pts[q].p).norm());
    }
  }
  if (r.comparisons == 0) {
    r.min_distance = 0.0;
    return r;
  }
  r.pass = r.min_distance > tol;
  return r;
}

std::string to_string(LambdaMethod m) {
  switch (m) {
    case LambdaMethod::Incremental:
      return "incremental";
    case LambdaMethod::Sojourn:
      return "sojourn";
    case LambdaMethod::Hessian:
      return "hessian";
  }
  return "unknown";
}

LambdaEstimate lambda_incremental(const spaces::Geodesic& g, std::size_t index, double t,
                                  const std::vector<double>& s_sequence, const flow::LevelFunction& Phi) {
  if (s_sequence.empty()) {
    throw DomainError("lambda_incremental: empty s sequence");
  }
  const auto mid = Phi(t, spaces::eval(g, t));
  if (!mid) {
    throw DomainError("lambda_incremental: gamma_t is outside the level function domain");
  }
  std::vector<double> hs;
  std::vector<double> qs;
  for (double s : s_sequence) {
    if (!(s > 0.0)) {
      throw DomainError("lambda_incremental: s values must be positive");
    }
    // Prefer the forward quotient; fall back to the backward one when the
    // forward point is past the end or outside the level function domain.
    bool forward = t + s <= 1.0;
    std::optional<double> other = forward ? Phi(t, spaces::eval(g, t + s)) : std::nullopt;
    if (!other && t - s >= 0.0) {
      forward = false;
      other = Phi(t, spaces::eval(g, t - s));
    }
    if (!other) {
      throw DomainError("lambda_incremental: gamma_{t+s} and gamma_{t-s} are outside the level function domain");
    }
    hs.push_back(forward ? s : -s);
    qs.push_back(forward ? (*mid - *other) / s : (*other - *mid) / s);
  }
  const double inv = flow::extrapolate_to_zero(hs, qs);
  if (!(inv > 0.0) || !std::isfinite(inv)) {
    throw AssumptionError("lambda_incremental: difference quotient limit " + std::to_string(inv) +
                          " is not positive and finite");
  }
  return {index, t, LambdaMethod::Incremental, 1.0 / inv};
}

LambdaEstimate lambda_sojourn(const spaces::Geodesic& g, std::size_t index, double t,
                              const std::vector<double>& eps_sequence, const flow::LevelFunction& Phi) {
  if (eps_sequence.empty()) {
    throw DomainError("lambda_sojourn: empty eps sequence");
  }
  const auto a_opt = Phi(t, spaces::eval(g, t));
  if (!a_opt) {
    throw DomainError("lambda_sojourn: gamma_t is outside the level function domain");
  }
  const double a = *a_opt;
  auto value_at = [&](double tau) -> double {
    const auto v = Phi(t, spaces::eval(g, tau));
    if (!v) {
      throw DomainError("lambda_sojourn: the preimage leaves the level function domain");
    }
    return *v;
  };
  for (double eps : eps_sequence) {
    if (!(eps > 0.0)) {
      throw DomainError("lambda_sojourn: eps values must be positive");
    }
  }
  // dir = +1 walks forward to the level a - eps; dir = -1 walks backward to
  // a + eps, which is used when the forward walk leaves the domain.
  auto sojourns = [&](double dir) {
    std::vector<double> qs;
    for (double eps : eps_sequence) {
      auto f = [&](double tau) { return dir * (value_at(tau) - a) + eps; };
      auto at = [&](double delta) { return std::clamp(t + dir * delta, 0.0, 1.0); };
      // Expand the bracket until it contains the crossing.
      double delta = eps;
      double end = at(delta);
      double f_end = f(end);
      while (f_end > 0.0) {
        if (end <= 0.0 || end >= 1.0) {
          throw DomainError("lambda_sojourn: the level is not reached inside [0, 1]");
        }
        delta *= 2.0;
        end = at(delta);
        f_end = f(end);
      }
      // Monotonicity on the bracket.
      double prev = eps;
      for (int k = 1; k <= 8; ++k) {
        const double v = f(t + (end - t) * k / 8.0);
        if (v > prev) {
          throw AssumptionError("lambda_sojourn: Phi_t is not decreasing along the geodesic");
        }
        prev = v;
      }
      double tau_eps = end;
      if (f_end < 0.0) {
        std::uintmax_t iters = 200;
        const double lo = std::min(t, end);
        const double hi = std::max(t, end);
        const auto r = boost::math::tools::toms748_solve(f, lo, hi, lo == t ? eps : f_end, lo == t ? f_end : eps,
                                                         boost::math::tools::eps_tolerance<double>(50), iters);
        tau_eps = 0.5 * (r.first + r.second);
      }
      qs.push_back(std::abs(tau_eps - t) / eps);
    }
    return qs;
  };
  std::vector<double> qs;
  try {
    qs = sojourns(1.0);
  } catch (const DomainError&) {
    qs = sojourns(-1.0);
  }
  const std::vector<double>& es = eps_sequence;
  const double lam = flow::extrapolate_to_zero(es, qs);
  if (!(lam > 0.0) || !std::isfinite(lam)) {
    throw AssumptionError("lambda_sojourn: sojourn density " + std::to_string(lam) + " is not positive");
  }
  return {index, t, LambdaMethod::Sojourn, lam};
}

LambdaEstimate lambda_hessian(const Point& grad_phi_t, const Matrix& hess_phi_t, double t, std::size_t index) {
  const auto d = grad_phi_t.size();
  const double q = grad_phi_t.dot((Matrix::Identity(d, d) + t * hess_phi_t) * grad_phi_t);
  if (!(q > 0.0) || !std::isfinite(q)) {
    throw AssumptionError("lambda_hessian: quadratic form " + std::to_string(q) + " is not positive");
  }
  return {index, t, LambdaMethod::Hessian, 1.0 / q};
}

LambdaEstimate lambda_hessian(const ScalarField& phi_t, const Point& z, double t, std::size_t index, double step) {
  const auto d = z.size();
  const double h = step;
  Point grad(d);
  Matrix hess(d, d);
  const double f0 = phi_t(z);
  for (Eigen::Index i = 0; i < d; ++i) {
    Point zp = z;
    Point zm = z;
    zp[i] += h;
    zm[i] -= h;
    const double fp = phi_t(zp);
    const double fm = phi_t(zm);
    grad[i] = (fp - fm) / (2.0 * h);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    for (Eigen::Index j = 0; j < i; ++j) {
      Point zpp = z;
      Point zpm = z;
      Point zmp = z;
      Point zmm = z;
      zpp[i] += h;
      zpp[j] += h;
      zpm[i] += h;
      zpm[j] -= h;
      zmp[i] -= h;
      zmp[j] += h;
      zmm[i] -= h;
      zmm[j] -= h;
      hess(i, j) = (phi_t(zpp) - phi_t(zpm) - phi_t(zmp) + phi_t(zmm)) / (4.0 * h * h);
      hess(j, i) = hess(i, j);
    }
  }
  return lambda_hessian(grad, hess, t, index);
}

LambdaEstimate lambda_hessian(const models::TransportModel& model, const Point& x0, double t, std::size_t index) {
  const auto d = x0.size();
  const Matrix H = model.hess_phi(x0);
  const Matrix J = Matrix::Identity(d, d) - t * H;
  Eigen::FullPivLU<Matrix> lu(J);
  if (!lu.isInvertible()) {
    throw AssumptionError("lambda_hessian: I - t Hess phi is singular");
  }
  const Matrix Ht = H * lu.inverse();
  return lambda_hessian(model.grad_phi(x0), Ht, t, index);
}

ScalarField evolved_potential(const models::TransportModel& model, double t) {
  return [&model, t](const Point& z) {
    const auto x = model.source_of(t, z);
    if (!x) {
      throw DomainError("evolved_potential: point is not in e_t(support)");
    }
    const double L = model.grad_phi(*x).norm();
    return model.phi(*x) - 0.5 * t * L * L;
  };
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

StripResult strip_conditionals(const models::TransportModel& model, double a, double t, const StripOptions& opt) {
  if (!(opt.eps > 0.0)) {
    throw DomainError("strip_conditionals: eps must be positive");
  }
  if (!(t >= 0.0 && t + opt.eps <= 1.0)) {
    throw DomainError("strip_conditionals: need 0 <= t and t + eps <= 1");
  }
  const auto& space = model.space();
  const models::Box box = models::Box::hull(model.support_box(t), model.support_box(t + opt.eps));
  const double vol = box.volume();
  const double w_bound = scan_bound(box, [&space](const Point& p) { return space.weight(p); });
  if (!(w_bound > 0.0)) {
    throw DomainError("strip_conditionals: reference density vanishes on the sampling box");
  }
  RandomStream rng(opt.seed, opt.stream);
  StripResult r;
  r.proposals = opt.budget;
  for (std::size_t k = 0; k < opt.budget; ++k) {
    const Point z = uniform_in(rng, box);
    const double w = space.weight(z);
    if (w < w_bound && rng.uniform() * w_bound >= w) {
      continue;
    }
    const auto x_t = model.source_of(t, z);
    if (!x_t) {
      continue;
    }
    const double phi_t = model.phi(*x_t);
    if (phi_t >= a - opt.eps && phi_t <= a) {
      r.m_hat.points.push_back(z);
    }
    const auto x_te = model.source_of(t + opt.eps, z);
    if (x_te && phi_t <= a && model.phi(*x_te) >= a) {
      r.m.points.push_back(z);
    }
  }
  if (r.m_hat.points.size() < opt.min_accepted || r.m.points.size() < opt.min_accepted) {
    throw ResolutionError("strip_conditionals: " + std::to_string(r.m_hat.points.size()) + " and " +
                          std::to_string(r.m.points.size()) + " accepted points, need " +
                          std::to_string(opt.min_accepted) + "; increase the budget or eps");
  }
  const double unit = vol * w_bound / static_cast<double>(opt.budget);
  for (auto* cloud : {&r.m_hat, &r.m}) {
    cloud->weights.assign(cloud->points.size(), unit);
    cloud->mass = unit * static_cast<double>(cloud->points.size());
  }
  return r;
}

double level_mass_density(const models::TransportModel& model, double a, double t, const StripOptions& opt) {
  if (!(opt.eps > 0.0)) {
    throw DomainError("level_mass_density: eps must be positive");
  }
  const auto& space = model.space();
  const models::Box box = model.support_box(0.0);
  auto density = [&](const Point& x) { return model.rho0(x) * space.weight(x); };
  const double bound = scan_bound(box, density);
  if (!(bound > 0.0)) {
    throw DomainError("level_mass_density: source density vanishes on its box");
  }
  RandomStream rng(opt.seed, opt.stream);
  std::size_t accepted = 0;
  std::size_t inside = 0;
  for (std::size_t k = 0; k < opt.budget; ++k) {
    const Point x = uniform_in(rng, box);
    const double f = density(x);
    if (f <= 0.0) {
      continue;
    }
    if (f < bound && rng.uniform() * bound >= f) {
      continue;
    }
    ++accepted;
    const auto back = model.source_of(t, model.eval(x, t));
    if (!back) {
      continue;
    }
    const double level = model.phi(*back);
    if (level >= a - opt.eps && level <= a) {
      ++inside;
    }
  }
  if (inside < opt.min_accepted) {
    throw ResolutionError("level_mass_density: " + std::to_string(inside) + " samples in the strip, need " +
                          std::to_string(opt.min_accepted));
  }
  return static_cast<double>(inside) / static_cast<double>(accepted) / opt.eps;
}

}  // namespace geodecomp::disint
