#include "geodecomp/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "geodecomp/distortion.hpp"

namespace geodecomp::decomp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Orthonormal basis of n^perp as the trailing columns of a Householder Q.
Matrix orthogonal_complement(const Point& n) {
  const auto d = n.size();
  if (d == 1) {
    return Matrix(1, 0);
  }
  const Matrix col = n;
  Eigen::HouseholderQR<Matrix> qr(col);
  const Matrix Q = qr.householderQ();
  return Q.rightCols(d - 1);
}

double max_rel(const std::vector<double>& num, double den) {
  double worst = 0.0;
  for (double v : num) {
    worst = std::max(worst, std::abs(v / den - 1.0));
  }
  return worst;
}

}  // namespace

double DecompositionRecord::identity_residual() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    worst = std::max(worst, std::abs(rho[k] * lambda[k] / (C_a * h[k]) - 1.0));
  }
  return worst;
}

double DecompositionRecord::normalization_drift() const { return max_rel(c_local, C_a); }

double DecompositionRecord::product_residual() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    worst = std::max(worst, std::abs(h[k] * g[k] - 1.0));
  }
  return worst;
}

double local_normalization(const models::TransportModel& model, const Point& x0, double t) {
  const auto d = x0.size();
  const Point g0 = model.grad_phi(x0);
  if (!(g0.norm() > 0.0)) {
    throw AssumptionError("local_normalization: grad phi vanishes at the start point");
  }
  const Matrix J = Matrix::Identity(d, d) - t * model.hess_phi(x0);
  Eigen::FullPivLU<Matrix> lu(J);
  if (!lu.isInvertible()) {
    throw AssumptionError("local_normalization: geodesics collapse at this time");
  }
  const Point grad_Phi = lu.solve(Matrix::Identity(d, d)).transpose() * g0;
  double tangential = 1.0;
  if (d > 1) {
    const Matrix JB = J * orthogonal_complement(g0);
    tangential = std::sqrt((JB.transpose() * JB).determinant());
  }
  const double rho = model.rho_t(x0, t);
  const double w = model.space().weight(model.eval(x0, t));
  return rho * w * tangential / grad_Phi.norm();
}

double line_density(const models::TransportModel& model, const Point& x0, double tau) {
  const auto d = x0.size();
  const Point g0 = model.grad_phi(x0);
  const Matrix J = Matrix::Identity(d, d) - tau * model.hess_phi(x0);
  Matrix M(d, d);
  if (d > 1) {
    M.leftCols(d - 1) = J * orthogonal_complement(g0);
  }
  M.col(d - 1) = g0;
  return model.space().weight(model.eval(x0, tau)) * std::abs(M.determinant());
}

std::vector<DecompositionRecord> build_decomposition(const models::TransportModel& model,
                                                     const spaces::DynamicalPlan& plan,
                                                     const disint::LevelClass& cls, const LambdaFn& lambda,
                                                     const std::vector<double>& t_grid) {
  std::vector<DecompositionRecord> out;
  out.reserve(cls.members.size());
  for (std::size_t i : cls.members) {
    const Point& x0 = plan.geodesic(i).x0();
    DecompositionRecord r;
    r.geodesic = i;
    r.a = model.phi(x0);
    r.L = model.length(x0);
    r.t_grid = t_grid;
    r.C_a = local_normalization(model, x0, 0.0);
    for (double t : t_grid) {
      const double rho = model.rho_t(x0, t);
      const double lam = lambda(i, x0, t);
      r.rho.push_back(rho);
      r.lambda.push_back(lam);
      r.h.push_back(rho * lam / r.C_a);
      r.c_local.push_back(local_normalization(model, x0, t));
      r.g.push_back(line_density(model, x0, t));
    }
    out.push_back(std::move(r));
  }
  return out;
}

double ResidualReport::min_residual() const {
  double m = kInf;
  for (const auto& s : samples) {
    m = std::min(m, s.value);
  }
  return samples.empty() ? 0.0 : m;
}

double ResidualReport::max_abs_residual() const {
  double m = 0.0;
  for (const auto& s : samples) {
    m = std::max(m, std::abs(s.value));
  }
  return m;
}

const ResidualSample& ResidualReport::worst() const {
  if (samples.empty()) {
    throw DomainError("ResidualReport::worst: no samples");
  }
  return *std::min_element(samples.begin(), samples.end(),
                           [](const ResidualSample& a, const ResidualSample& b) { return a.value < b.value; });
}

ResidualReport check_cd_star_reduced(const DecompositionRecord& record, double K, double N) {
  if (!(N >= 2.0)) {
    throw PreconditionError("check_cd_star_reduced: requires N >= 2");
  }
  const distortion::DistortionParams p(K, N - 1.0);
  const double expo = -1.0 / (N - 1.0);
  const auto& ts = record.t_grid;
  ResidualReport rep;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (std::size_t j = i + 1; j < ts.size(); ++j) {
      const double mid = 0.5 * (ts[i] + ts[j]);
      const auto it = std::find_if(ts.begin(), ts.end(), [mid](double s) { return std::abs(s - mid) <= 1e-12; });
      if (it == ts.end()) {
        continue;
      }
      const auto m = static_cast<std::size_t>(std::distance(ts.begin(), it));
      const double lhs = std::pow(record.h[m], expo);
      const auto sig = distortion::sigma(p, 0.5, (ts[j] - ts[i]) * record.L);
      const double ends = std::pow(record.h[i], expo) + std::pow(record.h[j], expo);
      const double rhs = sig.is_infinite() ? kInf : sig.value() * ends;
      rep.samples.push_back({record.geodesic, ts[i], ts[j], lhs - rhs});
    }
  }
  return rep;
}

double tau_half_split(double K, double N, double theta) {
  const auto s = distortion::sigma(distortion::DistortionParams(K, N - 1.0), 0.5, theta);
  return distortion::tau_from_sigma(0.5, s, N).to_double();
}

ResidualReport check_cd_pointwise(const models::TransportModel& model, const spaces::DynamicalPlan& plan, double K,
                                  double N, const std::vector<double>& t_grid) {
  const distortion::DistortionParams p(K, N);
  ResidualReport rep;
  auto weighted = [](const distortion::ExtendedReal& tau, double r) {
    if (r == 0.0) {
      return 0.0;
    }
    return tau.is_infinite() ? kInf : tau.value() * r;
  };
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const Point& x0 = plan.geodesic(i).x0();
    const double L = model.length(x0);
    const double r0 = std::pow(model.rho_t(x0, 0.0), -1.0 / N);
    const double r1 = std::pow(model.rho_t(x0, 1.0), -1.0 / N);
    for (double t : t_grid) {
      const double rt = std::pow(model.rho_t(x0, t), -1.0 / N);
      const double rhs = weighted(distortion::tau(p, 1.0 - t, L), r0) + weighted(distortion::tau(p, t, L), r1);
      rep.samples.push_back({i, t, t, rt - rhs});
    }
  }
  return rep;
}

SpecialClassReport check_special_class(const std::vector<double>& a, const std::vector<double>& L,
                                       Orientation orientation, double tol) {
  if (a.size() != L.size() || a.empty()) {
    throw DomainError("check_special_class: need matching nonempty level and length samples");
  }
  std::vector<std::size_t> order(a.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a[i] < a[j]; });

  struct Level {
    double a;
    double f;
  };
  std::vector<Level> levels;
  SpecialClassReport rep;
  rep.orientation = orientation;
  std::size_t k = 0;
  while (k < order.size()) {
    std::size_t end = k + 1;
    while (end < order.size() && a[order[end]] - a[order[end - 1]] <= tol * (1.0 + std::abs(a[order[end]]))) {
      ++end;
    }
    double lo = kInf;
    double hi = -kInf;
    double sum_a = 0.0;
    double sum_l = 0.0;
    for (std::size_t q = k; q < end; ++q) {
      lo = std::min(lo, L[order[q]]);
      hi = std::max(hi, L[order[q]]);
      sum_a += a[order[q]];
      sum_l += L[order[q]];
    }
    const double n = static_cast<double>(end - k);
    const double spread = (hi - lo) / (1.0 + hi);
    rep.max_length_spread = std::max(rep.max_length_spread, spread);
    levels.push_back({sum_a / n, sum_l / n});
    k = end;
  }
  rep.levels = levels.size();
  rep.length_is_function_of_level = rep.max_length_spread <= 10.0 * tol;

  const double sign = orientation == Orientation::NonDecreasing ? 1.0 : -1.0;
  rep.worst_level_map_step = levels.size() > 1 ? kInf : 0.0;
  for (std::size_t q = 1; q < levels.size(); ++q) {
    const double F0 = levels[q - 1].a - 0.5 * levels[q - 1].f * levels[q - 1].f;
    const double F1 = levels[q].a - 0.5 * levels[q].f * levels[q].f;
    const double step = sign * (F1 - F0);
    rep.worst_level_map_step = std::min(rep.worst_level_map_step, step);
    if (step < -tol * (1.0 + std::abs(F0) + std::abs(F1))) {
      rep.level_map_monotone = false;
    }
    if (levels[q - 1].a != 0.0 && levels[q].a != 0.0) {
      const double G0 = levels[q - 1].a - levels[q - 1].f * levels[q - 1].f / levels[q - 1].a;
      const double G1 = levels[q].a - levels[q].f * levels[q].f / levels[q].a;
      if (G1 - G0 > tol * (1.0 + std::abs(G0) + std::abs(G1))) {
        rep.alternative_reading_holds = false;
      }
    }
  }
  return rep;
}

LinearityVerdict check_lambda_linear(const std::vector<DecompositionRecord>& records, double tol,
                                     const SpecialClassReport& special) {
  if (!special.in_class()) {
    throw PreconditionError(
        "check_lambda_linear: transport is outside the special class (L not a function of the level, or "
        "a - f^2/2 not monotone)");
  }
  LinearityVerdict v;
  for (const auto& r : records) {
    const auto n = static_cast<double>(r.t_grid.size());
    if (r.t_grid.size() < 2) {
      continue;
    }
    const double mt = std::accumulate(r.t_grid.begin(), r.t_grid.end(), 0.0) / n;
    const double ml = std::accumulate(r.lambda.begin(), r.lambda.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < r.t_grid.size(); ++k) {
      sxx += (r.t_grid[k] - mt) * (r.t_grid[k] - mt);
      sxy += (r.t_grid[k] - mt) * (r.lambda[k] - ml);
    }
    const double slope = sxy / sxx;
    for (std::size_t k = 0; k < r.t_grid.size(); ++k) {
      const double dev = std::abs(r.lambda[k] - (ml + slope * (r.t_grid[k] - mt)));
      if (dev > v.max_deviation) {
        v.max_deviation = dev;
        v.worst_geodesic = r.geodesic;
      }
    }
  }
  v.pass = v.max_deviation < tol;
  return v;
}

W2Construction build_w2_from_monotone(const spaces::DynamicalPlan& plan, const disint::LevelClass& cls,
                                      ValueInterval first, ValueInterval second, std::size_t n_time,
                                      std::size_t n_samples) {
  if (!(first.lo < first.hi) || !(second.lo < second.hi)) {
    throw PreconditionError("build_w2_from_monotone: value intervals must have lo < hi");
  }
  const bool same = first.lo == second.lo && first.hi == second.hi;
  if (!same && !(first.hi > first.lo && first.lo > second.hi && second.hi > second.lo)) {
    throw PreconditionError("build_w2_from_monotone: need b0 > a0 > b1 > a1");
  }
  if (n_time < 2 || n_samples == 0) {
    throw DomainError("build_w2_from_monotone: need n_time >= 2 and n_samples >= 1");
  }
  W2Construction out;
  struct Segment {
    const spaces::Geodesic* g;
    double R0, L0, R1, L1, weight;
  };
  std::vector<Segment> segs;
  const double a = cls.a;
  for (std::size_t i : cls.members) {
    const auto& g = plan.geodesic(i);
    const double L = g.length();
    const double R0 = (a - first.hi) / L;
    const double R1 = (a - second.hi) / L;
    const double E0 = (a - first.lo) / L;
    const double E1 = (a - second.lo) / L;
    if (!(L > 0.0) || R0 < 0.0 || R1 < 0.0 || E0 > 1.0 || E1 > 1.0) {
      out.excluded.push_back(i);
      continue;
    }
    out.members.push_back(i);
    segs.push_back({&g, R0, E0 - R0, R1, E1 - R1, plan.weight(i)});
  }
  if (segs.empty()) {
    throw PreconditionError("build_w2_from_monotone: no class member contains both value intervals");
  }
  double total = 0.0;
  for (const auto& s : segs) {
    total += s.weight;
  }
  const double dn = static_cast<double>(n_samples);
  for (std::size_t k = 0; k < n_time; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n_time - 1);
    std::vector<Point> pts;
    std::vector<double> ws;
    for (const auto& s : segs) {
      const double R = (1.0 - t) * s.R0 + t * s.R1;
      const double Ls = (1.0 - t) * s.L0 + t * s.L1;
      for (std::size_t q = 0; q < n_samples; ++q) {
        const double sigma = (static_cast<double>(q) + 0.5) / dn;
        pts.push_back(spaces::eval(*s.g, R + sigma * Ls));
        ws.push_back(s.weight / total / dn);
      }
    }
    out.times.push_back(t);
    out.nu.emplace_back(std::move(pts), std::move(ws));
  }
  for (const auto& s : segs) {
    for (std::size_t q = 0; q < n_samples; ++q) {
      const double sigma = (static_cast<double>(q) + 0.5) / dn;
      out.delta_pairs.emplace_back(spaces::eval(*s.g, s.R0 + sigma * s.L0), spaces::eval(*s.g, s.R1 + sigma * s.L1));
    }
  }
  return out;
}

W2Report check_w2_geodesic(const W2Construction& c, const ot::CycleOptions& cycles) {
  const auto cost = ot::half_squared_distance();
  auto w2 = [&](std::size_t i, std::size_t j) {
    const auto plan = ot::solve_ot(c.nu[i], c.nu[j], cost);
    return std::sqrt(std::max(0.0, 2.0 * plan.cost_total));
  };
  W2Report rep;
  const std::size_t n = c.nu.size();
  rep.w2_endpoints = w2(0, n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double expect = std::abs(c.times[j] - c.times[i]) * rep.w2_endpoints;
      rep.max_deviation = std::max(rep.max_deviation, std::abs(w2(i, j) - expect));
    }
  }
  rep.monotone = ot::check_cyclical_monotonicity(c.delta_pairs, cost, cycles);
  return rep;
}

ResidualReport check_mcp_bound(const std::vector<double>& tau, const std::vector<double>& g, double L, double K,
                               double N, std::size_t geodesic) {
  if (!(N > 1.0)) {
    throw PreconditionError("check_mcp_bound: requires N > 1");
  }
  if (tau.size() != g.size()) {
    throw DomainError("check_mcp_bound: tau and g differ in length");
  }
  const double k = K / (N - 1.0);
  auto sK = [k](double x) {
    if (k > 0.0) {
      return std::sin(x * std::sqrt(k));
    }
    if (k < 0.0) {
      return std::sinh(x * std::sqrt(-k));
    }
    return x;
  };
  ResidualReport rep;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    for (std::size_t j = i; j < tau.size(); ++j) {
      const double r = std::min(tau[i], tau[j]);
      const double R = std::max(tau[i], tau[j]);
      if (!(r > 0.0 && R < 1.0)) {
        continue;
      }
      const double ratio = tau[i] <= tau[j] ? g[i] / g[j] : g[j] / g[i];
      const double den_lo = sK(R * L);
      const double den_hi = sK((1.0 - R) * L);
      if (!(den_lo > 0.0) || !(den_hi > 0.0)) {
        throw DomainError("check_mcp_bound: geodesic too long for the comparison function");
      }
      const double lower = std::pow(sK(r * L) / den_lo, N - 1.0);
      const double upper = std::pow(sK((1.0 - r) * L) / den_hi, N - 1.0);
      rep.samples.push_back({geodesic, r, R, ratio - lower});
      rep.samples.push_back({geodesic, r, R, upper - ratio});
    }
  }
  return rep;
}

}  // namespace geodecomp::decomp
