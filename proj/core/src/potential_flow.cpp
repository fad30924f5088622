#include "geodecomp/potential_flow.hpp"

#include "geodecomp/ot_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace geodecomp::flow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

PotentialField hopf_lax(const PotentialField& psi, double t, double s, const std::vector<Point>& query_points) {
  if (psi.points.empty()) {
    throw DomainError("hopf_lax: empty sample set");
  }
  if (psi.points.size() != psi.values.size()) {
    throw DomainError("hopf_lax: points and values differ in length");
  }
  PotentialField out;
  out.points = query_points;
  out.values.resize(query_points.size());
  out.provenance = Provenance::HopfLaxEvolved;
  if (t == s) {
    out.provenance = psi.provenance;
    for (std::size_t q = 0; q < query_points.size(); ++q) {
      const auto it = std::find(psi.points.begin(), psi.points.end(), query_points[q]);
      if (it == psi.points.end()) {
        throw DomainError("hopf_lax: identity step queried off the sample set");
      }
      out.values[q] = psi.values[static_cast<std::size_t>(std::distance(psi.points.begin(), it))];
    }
    return out;
  }
  const double gap = std::abs(s - t);
  const bool inf_branch = t < s;
  for (std::size_t q = 0; q < query_points.size(); ++q) {
    const Point& x = query_points[q];
    double best = inf_branch ? kInf : -kInf;
    for (std::size_t j = 0; j < psi.points.size(); ++j) {
      const double quad = (x - psi.points[j]).squaredNorm() / (2.0 * gap);
      if (inf_branch) {
        best = std::min(best, quad + psi.values[j]);
      } else {
        best = std::max(best, psi.values[j] - quad);
      }
    }
    out.values[q] = best;
  }
  return out;
}

PotentialField evolve_kantorovich(const PotentialField& phi_c, double t, const spaces::DynamicalPlan& plan) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("evolve_kantorovich: t must lie in [0,1]");
  }
  std::vector<Point> query;
  query.reserve(plan.size());
  for (const auto& g : plan.geodesics()) {
    query.push_back(spaces::eval(g, t));
  }
  PotentialField h = hopf_lax(phi_c, 1.0, t, query);
  for (double& v : h.values) {
    v = -v;
  }
  h.provenance = Provenance::HopfLaxEvolved;
  return h;
}

double LevelFunctionSample::discrepancy() const { return std::abs(Phi_value - Phi_start); }

std::vector<LevelFunctionSample> phi_level(const spaces::DynamicalPlan& plan, const std::vector<double>& phi_t,
                                           const std::vector<double>& phi0, double t) {
  if (phi_t.size() != plan.size() || phi0.size() != plan.size()) {
    throw DomainError("phi_level: potential samples do not match the plan");
  }
  std::vector<LevelFunctionSample> out(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const double L = plan.geodesic(i).length();
    out[i] = {i, t, phi_t[i] + 0.5 * t * L * L, L, phi0[i]};
  }
  return out;
}

LevelFunction analytic_level(const models::TransportModel& model) {
  return [&model](double t, const Point& z) -> std::optional<double> {
    const auto x = model.source_of(t, z);
    if (!x) {
      return std::nullopt;
    }
    return model.phi(*x);
  };
}

LevelFunction sampled_level_1d(const spaces::DynamicalPlan& plan, const std::vector<double>& phi0) {
  if (phi0.size() != plan.size()) {
    throw DomainError("sampled_level_1d: potential samples do not match the plan");
  }
  if (plan.geodesic(0).x0().size() != 1) {
    throw DomainError("sampled_level_1d: plan is not one-dimensional");
  }
  if (plan.size() < 2) {
    throw DomainError("sampled_level_1d: need at least two geodesics");
  }
  // Copies are captured so the function outlives its arguments.
  std::vector<Point> x0;
  std::vector<Point> x1;
  for (const auto& g : plan.geodesics()) {
    x0.push_back(g.x0());
    x1.push_back(g.x1());
  }
  return [x0, x1, phi0](double t, const Point& z) -> std::optional<double> {
    const std::size_t n = x0.size();
    std::vector<std::pair<double, double>> nodes(n);
    for (std::size_t j = 0; j < n; ++j) {
      nodes[j] = {(1.0 - t) * x0[j][0] + t * x1[j][0], phi0[j]};
    }
    std::sort(nodes.begin(), nodes.end());
    const double x = z[0];
    if (x < nodes.front().first || x > nodes.back().first) {
      return std::nullopt;
    }
    auto it = std::upper_bound(nodes.begin(), nodes.end(), std::make_pair(x, std::numeric_limits<double>::infinity()));
    if (it == nodes.end()) {
      return nodes.back().second;
    }
    if (it == nodes.begin()) {
      return nodes.front().second;
    }
    const auto& right = *it;
    const auto& left = *(it - 1);
    if (right.first == left.first) {
      return left.second;
    }
    const double w = (x - left.first) / (right.first - left.first);
    return (1.0 - w) * left.second + w * right.second;
  };
}

MonotoneVerdict check_phi_monotone(const LevelFunction& Phi, const spaces::DynamicalPlan& plan, double t,
                                   const std::vector<double>& s_grid) {
  MonotoneVerdict v;
  v.min_gap = kInf;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& g = plan.geodesic(i);
    const auto mid = Phi(t, spaces::eval(g, t));
    if (!mid) {
      ++v.skipped;
      continue;
    }
    for (double s : s_grid) {
      if (!(s > 0.0)) {
        continue;
      }
      const auto check = [&](double gap) {
        ++v.comparisons;
        if (gap < v.min_gap) {
          v.min_gap = gap;
          v.worst_geodesic = i;
          v.worst_s = s;
        }
        if (!(gap > 0.0)) {
          v.pass = false;
        }
      };
      if (t - s >= 0.0) {
        if (const auto before = Phi(t, spaces::eval(g, t - s))) {
          check(*before - *mid);
        } else {
          ++v.skipped;
        }
      }
      if (t + s <= 1.0) {
        if (const auto after = Phi(t, spaces::eval(g, t + s))) {
          check(*mid - *after);
        } else {
          ++v.skipped;
        }
      }
    }
  }
  if (v.comparisons == 0) {
    v.min_gap = 0.0;
  }
  return v;
}

double extrapolate_to_zero(const std::vector<double>& s, const std::vector<double>& f) {
  if (s.empty() || s.size() != f.size()) {
    throw DomainError("extrapolate_to_zero: need matching nonempty samples");
  }
  std::vector<double> p(f);
  const std::size_t n = s.size();
  for (std::size_t m = 1; m < n; ++m) {
    for (std::size_t i = 0; i + m < n; ++i) {
      const double den = s[i + m] - s[i];
      if (den == 0.0) {
        throw DomainError("extrapolate_to_zero: repeated abscissa");
      }
      p[i] = (s[i + m] * p[i] - s[i] * p[i + 1]) / den;
    }
  }
  return p[0];
}

std::vector<AssumptionReport> check_assumptions(const LevelFunction& Phi, const spaces::DynamicalPlan& plan,
                                                const std::vector<double>& t_grid,
                                                const std::vector<double>& s_sequence) {
  std::vector<AssumptionReport> out;
  for (double t : t_grid) {
    AssumptionReport r;
    r.t = t;
    std::vector<Point> pts;
    pts.reserve(plan.size());
    for (const auto& g : plan.geodesics()) {
      pts.push_back(spaces::eval(g, t));
    }
    for (std::size_t i = 0; i < plan.size(); ++i) {
      for (std::size_t j = i + 1; j < plan.size(); ++j) {
        const double dist = (pts[i] - pts[j]).norm();
        if (dist == 0.0) {
          continue;
        }
        r.lipschitz = std::max(r.lipschitz, std::abs(plan.geodesic(i).length() - plan.geodesic(j).length()) / dist);
      }
    }
    r.aphi_min = kInf;
    r.aphi_max = -kInf;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      const auto& g = plan.geodesic(i);
      const auto mid = Phi(t, pts[i]);
      std::vector<double> ss;
      std::vector<double> qs;
      for (double s : s_sequence) {
        // Backward quotients near the end of the geodesic.
        const double tau = t + s <= 1.0 ? t + s : t - s;
        const double sign = t + s <= 1.0 ? 1.0 : -1.0;
        const auto other = Phi(t, spaces::eval(g, tau));
        if (!mid || !other) {
          continue;
        }
        ss.push_back(sign * s);
        qs.push_back(sign * (*mid - *other) / s);
      }
      if (ss.empty()) {
        ++r.undefined;
        continue;
      }
      const double lim = extrapolate_to_zero(ss, qs);
      if (!std::isfinite(lim)) {
        r.finite = false;
        continue;
      }
      r.aphi_min = std::min(r.aphi_min, lim);
      r.aphi_max = std::max(r.aphi_max, lim);
    }
    if (r.aphi_min == kInf) {
      r.aphi_min = 0.0;
      r.aphi_max = 0.0;
    }
    out.push_back(r);
  }
  return out;
}

double sampled_evolution_error(const models::TransportModel& model, std::size_t per_axis,
                               const std::vector<double>& t_grid, std::size_t n_query) {
  const auto src = model.source_grid(per_axis);
  std::vector<Point> targets;
  std::vector<double> target_w;
  for (std::size_t i = 0; i < src.points.size(); ++i) {
    const Point y = model.map(src.points[i]);
    const auto it = std::find(targets.begin(), targets.end(), y);
    if (it == targets.end()) {
      targets.push_back(y);
      target_w.push_back(src.weights[i]);
    } else {
      target_w[static_cast<std::size_t>(std::distance(targets.begin(), it))] += src.weights[i];
    }
  }
  const ot::DiscreteMeasure mu(src.points, src.weights);
  const ot::DiscreteMeasure nu(targets, target_w);
  const auto plan = ot::solve_ot(mu, nu, ot::half_squared_distance());
  const PotentialField psi{targets, plan.dual_target, Provenance::DualFromSolver};

  const auto queries = model.source_grid(n_query);
  double lo = kInf;
  double hi = -kInf;
  for (double t : t_grid) {
    if (!(t >= 0.0 && t < 1.0)) {
      throw DomainError("sampled_evolution_error: times must lie in [0,1)");
    }
    std::vector<Point> z;
    z.reserve(queries.points.size());
    for (const auto& x : queries.points) {
      z.push_back(model.eval(x, t));
    }
    const auto evolved = hopf_lax(psi, 1.0, t, z);
    for (std::size_t q = 0; q < z.size(); ++q) {
      const Point& x = queries.points[q];
      const double exact = model.phi(x) - 0.5 * t * model.grad_phi(x).squaredNorm();
      const double diff = -evolved.values[q] - exact;
      lo = std::min(lo, diff);
      hi = std::max(hi, diff);
    }
  }
  return 0.5 * (hi - lo);
}

}  // namespace geodecomp::flow
