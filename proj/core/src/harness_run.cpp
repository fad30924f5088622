#include "geodecomp/harness_run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "geodecomp/decomposition.hpp"
#include "geodecomp/disintegration.hpp"
#include "geodecomp/distortion.hpp"
#include "geodecomp/ot_core.hpp"
#include "geodecomp/parallel.hpp"
#include "geodecomp/potential_flow.hpp"

namespace geodecomp::harness {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Context {
  const ScenarioConfig& cfg;
  const models::TransportModel& model;
  const spaces::DynamicalPlan& plan;
  std::vector<double> phi0;
  std::vector<double> lengths;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  /// Base RNG stream of the running check; disjoint across checks.
  std::uint64_t stream = 0;
};

class Builder {
 public:
  explicit Builder(std::string name) { r_.name = std::move(name); }

  void metric(const std::string& key, double value) { metrics_[key] = value; }
  void row(const std::string& quantity, std::int64_t geodesic, double t0, double t1, double value) {
    r_.residuals.push_back({quantity, geodesic, t0, t1, value});
  }
  void fail(const std::string& why) {
    r_.status = Status::Fail;
    append(why);
  }
  void warn(const std::string& why) {
    if (r_.status == Status::Pass) {
      r_.status = Status::Warn;
    }
    append(why);
  }
  void expect(bool ok, const std::string& why) {
    if (!ok) {
      fail(why);
    }
  }
  void note(const std::string& text) { append(text); }

  CheckResult finish() {
    r_.metrics.assign(metrics_.begin(), metrics_.end());
    return std::move(r_);
  }

 private:
  void append(const std::string& text) {
    if (!r_.message.empty()) {
      r_.message += "; ";
    }
    r_.message += text;
  }

  CheckResult r_;
  std::map<std::string, double> metrics_;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

bool listed(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::vector<double> open_times(const std::vector<double>& grid) {
  std::vector<double> out;
  for (double t : grid) {
    if (t > 0.0 && t < 1.0) {
      out.push_back(t);
    }
  }
  return out;
}

/// Discrete measure with coincident points merged.
ot::DiscreteMeasure merged_measure(const std::vector<Point>& points, const std::vector<double>& weights) {
  std::vector<Point> pts;
  std::vector<double> ws;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto it = std::find(pts.begin(), pts.end(), points[i]);
    if (it == pts.end()) {
      pts.push_back(points[i]);
      ws.push_back(weights[i]);
    } else {
      ws[static_cast<std::size_t>(std::distance(pts.begin(), it))] += weights[i];
    }
  }
  return ot::DiscreteMeasure(std::move(pts), std::move(ws));
}

ot::DiscreteMeasure plan_marginal(const spaces::DynamicalPlan& plan, double t) {
  std::vector<Point> pts;
  for (const auto& g : plan.geodesics()) {
    pts.push_back(spaces::eval(g, t));
  }
  return merged_measure(pts, plan.weights());
}

double w2_distance(const ot::DiscreteMeasure& a, const ot::DiscreteMeasure& b) {
  return std::sqrt(std::max(0.0, 2.0 * ot::solve_ot(a, b, ot::half_squared_distance()).cost_total));
}

decomp::LambdaFn lambda_fn(const Context& ctx) {
  const auto& model = ctx.model;
  const auto& plan = ctx.plan;
  const auto& grids = ctx.cfg.grids;
  const std::string method = ctx.cfg.lambda_method;
  const auto Phi = flow::analytic_level(model);
  return [&model, &plan, &grids, method, Phi](std::size_t i, const Point& x0, double t) {
    if (method == "incremental") {
      return disint::lambda_incremental(plan.geodesic(i), i, t, grids.s_sequence, Phi).value;
    }
    if (method == "sojourn") {
      return disint::lambda_sojourn(plan.geodesic(i), i, t, grids.eps_sequence, Phi).value;
    }
    return disint::lambda_hessian(model, x0, t, i).value;
  };
}

disint::LevelClass whole_plan(const spaces::DynamicalPlan& plan) {
  disint::LevelClass c;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    c.members.push_back(i);
    c.weight += plan.weight(i);
  }
  return c;
}

std::vector<decomp::DecompositionRecord> all_records(const Context& ctx) {
  const auto classes = disint::partition_levels(ctx.plan, ctx.phi0, ctx.cfg.grids.bins);
  const auto lambda = lambda_fn(ctx);
  std::vector<std::vector<decomp::DecompositionRecord>> parts(classes.size());
  parallel_for(classes.size(), ctx.jobs, [&](std::size_t k) {
    parts[k] = decomp::build_decomposition(ctx.model, ctx.plan, classes[k], lambda, ctx.cfg.grids.t_grid);
  });
  std::vector<decomp::DecompositionRecord> out;
  for (auto& p : parts) {
    for (auto& r : p) {
      out.push_back(std::move(r));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.geodesic < b.geodesic; });
  return out;
}

/// Representative geodesic for single-level Monte-Carlo estimates.
std::size_t representative(const Context& ctx) { return ctx.plan.size() / 2; }

void add_report_rows(Builder& b, const std::string& quantity, const decomp::ResidualReport& rep) {
  for (const auto& s : rep.samples) {
    b.row(quantity, static_cast<std::int64_t>(s.geodesic), s.t0, s.t1, s.value);
  }
}

void judge_inequality(Builder& b, const Context& ctx, const std::string& name, const decomp::ResidualReport& rep) {
  const double min = rep.min_residual();
  b.metric("min_residual", min);
  b.metric("max_abs_residual", rep.max_abs_residual());
  b.metric("samples", static_cast<double>(rep.samples.size()));
  b.expect(!rep.samples.empty(), "no residual samples");
  b.expect(min >= -ctx.cfg.tolerances.cd, "min residual " + fmt(min) + " below -" + fmt(ctx.cfg.tolerances.cd));
  if (listed(ctx.cfg.expect_equality, name)) {
    b.expect(rep.max_abs_residual() <= ctx.cfg.tolerances.equality,
             "equality expected; max |residual| " + fmt(rep.max_abs_residual()));
  }
}

// ---------------------------------------------------------------------------

void check_kantorovich_duality(const Context& ctx, Builder& b) {
  std::vector<Point> src;
  std::vector<Point> dst;
  for (const auto& g : ctx.plan.geodesics()) {
    src.push_back(g.x0());
    dst.push_back(g.x1());
  }
  const auto mu = merged_measure(src, ctx.plan.weights());
  const auto nu = merged_measure(dst, ctx.plan.weights());
  const auto cost = ot::half_squared_distance();
  const auto sol = ot::solve_ot(mu, nu, cost);
  double plan_cost = 0.0;
  for (std::size_t i = 0; i < ctx.plan.size(); ++i) {
    plan_cost += ctx.plan.weight(i) * cost(src[i], dst[i]);
  }
  const double gap = std::abs(sol.duality_gap());
  const double excess = plan_cost - sol.cost_total;
  b.metric("duality_gap", gap);
  b.metric("ot_cost", sol.cost_total);
  b.metric("plan_cost", plan_cost);
  b.metric("plan_excess", excess);

  auto index_of = [](const ot::DiscreteMeasure& m, const Point& p) {
    const auto it = std::find(m.points().begin(), m.points().end(), p);
    return static_cast<std::size_t>(std::distance(m.points().begin(), it));
  };
  double worst_slack = 0.0;
  for (std::size_t i = 0; i < ctx.plan.size(); ++i) {
    const std::size_t si = index_of(mu, src[i]);
    const std::size_t ti = index_of(nu, dst[i]);
    const double slack = cost(src[i], dst[i]) - sol.dual_source[si] - sol.dual_target[ti];
    worst_slack = std::max(worst_slack, std::abs(slack));
    b.row("slack", static_cast<std::int64_t>(i), 0.0, 1.0, slack);
  }
  b.metric("max_plan_slack", worst_slack);

  const auto support = ot::support_pairs(sol, mu, nu);
  std::vector<ot::PointPair> plan_pairs;
  for (std::size_t i = 0; i < src.size(); ++i) {
    plan_pairs.emplace_back(src[i], dst[i]);
  }
  const auto solver_cycles = ot::check_cyclical_monotonicity(support, cost);
  const auto plan_cycles = ot::check_cyclical_monotonicity(plan_pairs, cost);
  b.metric("support_cycles_checked", static_cast<double>(solver_cycles.cycles_checked));
  b.metric("plan_cycles_checked", static_cast<double>(plan_cycles.cycles_checked));
  b.metric("plan_cycle_margin", plan_cycles.margin);

  const double tol = ctx.cfg.tolerances.duality;
  b.expect(gap < tol, "duality gap " + fmt(gap));
  b.expect(solver_cycles.pass, "solver support is not 3-cyclically monotone");
  b.expect(plan_cycles.pass, "plan support is not 3-cyclically monotone");
  b.expect(std::abs(excess) <= tol * (1.0 + sol.cost_total), "plan cost exceeds the optimum by " + fmt(excess));
}

void check_geodesic_w2(const Context& ctx, Builder& b) {
  std::vector<double> times{0.0};
  for (double t : ctx.cfg.grids.t_grid) {
    if (t > 0.0 && t < 1.0) {
      times.push_back(t);
    }
  }
  times.push_back(1.0);
  std::vector<ot::DiscreteMeasure> mus;
  for (double t : times) {
    mus.push_back(plan_marginal(ctx.plan, t));
  }
  const double total = w2_distance(mus.front(), mus.back());
  b.metric("w2_endpoints", total);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t j = i + 1; j < times.size(); ++j) {
      pairs.emplace_back(i, j);
    }
  }
  std::vector<double> dev(pairs.size());
  parallel_for(pairs.size(), ctx.jobs, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    dev[k] = w2_distance(mus[i], mus[j]) - (times[j] - times[i]) * total;
  });
  double worst = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    worst = std::max(worst, std::abs(dev[k]));
    b.row("w2_deviation", -1, times[pairs[k].first], times[pairs[k].second], dev[k]);
  }
  b.metric("max_deviation", worst);
  b.expect(worst < ctx.cfg.tolerances.w2, "max deviation " + fmt(worst));
}

flow::PotentialField target_potential(const Context& ctx) {
  flow::PotentialField psi;
  psi.provenance = flow::Provenance::Analytic;
  for (const auto& g : ctx.plan.geodesics()) {
    psi.points.push_back(g.x1());
    psi.values.push_back(ctx.model.phi_c(g.x1()));
  }
  return psi;
}

void check_hopf_lax(const Context& ctx, Builder& b) {
  const auto psi = target_potential(ctx);
  const auto& ts = ctx.cfg.grids.t_grid;
  std::vector<std::vector<double>> values(ts.size());
  parallel_for(ts.size(), ctx.jobs,
               [&](std::size_t k) { values[k] = flow::evolve_kantorovich(psi, ts[k], ctx.plan).values; });
  double worst = 0.0;
  double worst_affine = 0.0;
  for (std::size_t i = 0; i < ctx.plan.size(); ++i) {
    const double L = ctx.lengths[i];
    std::vector<double> ys;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double r = values[k][i] - (ctx.phi0[i] - 0.5 * ts[k] * L * L);
      worst = std::max(worst, std::abs(r));
      b.row("evolution", static_cast<std::int64_t>(i), ts[k], ts[k], r);
      ys.push_back(values[k][i]);
    }
    // Affinity of t -> phi_t(gamma_t): deviation from the chord through the end samples.
    const double t0 = ts.front();
    const double t1 = ts.back();
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double w = (ts[k] - t0) / (t1 - t0);
      const double chord = (1.0 - w) * ys.front() + w * ys.back();
      worst_affine = std::max(worst_affine, std::abs(ys[k] - chord));
    }
  }
  b.metric("max_evolution_error", worst);
  b.metric("max_affinity_error", worst_affine);
  const double tol = ctx.cfg.tolerances.identity;
  b.expect(worst < tol, "evolution error " + fmt(worst));
  b.expect(worst_affine < tol, "affinity error " + fmt(worst_affine));

  // Sampled potentials from solver duals: error must halve when the grid doubles.
  std::vector<double> dts;
  for (double t : ts) {
    if (t < 1.0) {
      dts.push_back(t);
    }
  }
  const std::size_t n = ctx.cfg.grids.geodesics_per_axis;
  const std::size_t nq = 2 * n + 1;
  const double coarse = flow::sampled_evolution_error(ctx.model, n, dts, nq);
  const double fine = flow::sampled_evolution_error(ctx.model, 2 * n, dts, nq);
  b.metric("sampled_error_coarse", coarse);
  b.metric("sampled_error_fine", fine);
  if (coarse < 1e-12) {
    // All targets coincide: the sampled evolution is exact and has no rate.
    b.note("sampled evolution exact at both resolutions");
    return;
  }
  const double ratio = coarse / fine;
  b.metric("doubling_ratio", ratio);
  b.row("doubling_ratio", -1, 0.0, 0.0, ratio);
  const double expected = ctx.cfg.grids.doubling_ratio;
  if (expected == 0.0) {
    b.note("doubling ratio " + fmt(ratio) + " recorded without assertion");
    return;
  }
  const double band = ctx.cfg.tolerances.doubling;
  b.expect(std::abs(ratio / expected - 1.0) <= band,
           "doubling ratio " + fmt(ratio) + " outside " + fmt(expected) + " +- " + fmt(band * 100) + "%");
}

void check_phi_level(const Context& ctx, Builder& b) {
  const auto psi = target_potential(ctx);
  double worst = 0.0;
  for (double t : ctx.cfg.grids.t_grid) {
    const auto phit = flow::evolve_kantorovich(psi, t, ctx.plan);
    for (const auto& s : flow::phi_level(ctx.plan, phit.values, ctx.phi0, t)) {
      const double r = s.Phi_value - s.Phi_start;
      worst = std::max(worst, std::abs(r));
      b.row("level", static_cast<std::int64_t>(s.geodesic), t, t, r);
    }
  }
  b.metric("max_discrepancy", worst);
  b.expect(worst < ctx.cfg.tolerances.identity, "level discrepancy " + fmt(worst));
}

void check_phi_monotone(const Context& ctx, Builder& b) {
  const auto Phi = flow::analytic_level(ctx.model);
  double min_gap = kInf;
  std::size_t comparisons = 0;
  std::size_t skipped = 0;
  for (double t : ctx.cfg.grids.t_grid) {
    const auto v = flow::check_phi_monotone(Phi, ctx.plan, t, ctx.cfg.grids.s_sequence);
    comparisons += v.comparisons;
    skipped += v.skipped;
    if (v.comparisons > 0) {
      min_gap = std::min(min_gap, v.min_gap);
      b.row("min_gap", static_cast<std::int64_t>(v.worst_geodesic), t, t, v.min_gap);
    }
    b.expect(v.pass, "Phi_t not strictly decreasing along geodesics at t = " + fmt(t));
  }
  b.metric("comparisons", static_cast<double>(comparisons));
  b.metric("skipped", static_cast<double>(skipped));
  b.metric("min_gap", comparisons > 0 ? min_gap : 0.0);
  b.expect(comparisons > 0, "no comparisons were possible");
}

void check_assumptions(const Context& ctx, Builder& b) {
  const auto Phi = flow::analytic_level(ctx.model);
  std::vector<double> ts;
  for (double t : ctx.cfg.grids.t_grid) {
    if (t < 1.0) {
      ts.push_back(t);
    }
  }
  double lip = 0.0;
  double amin = kInf;
  double amax = 0.0;
  for (const auto& r : flow::check_assumptions(Phi, ctx.plan, ts, ctx.cfg.grids.s_sequence)) {
    lip = std::max(lip, r.lipschitz);
    amin = std::min(amin, r.aphi_min);
    amax = std::max(amax, r.aphi_max);
    b.row("lipschitz", -1, r.t, r.t, r.lipschitz);
    b.row("aphi_min", -1, r.t, r.t, r.aphi_min);
    b.expect(r.holds(), "level quotient not positive and finite at t = " + fmt(r.t) +
                            (r.undefined ? " (" + std::to_string(r.undefined) + " undefined)" : ""));
  }
  b.metric("lipschitz", lip);
  b.metric("aphi_min", amin);
  b.metric("aphi_max", amax);
  b.expect(std::isfinite(lip), "length is not Lipschitz on e_t(G)");
}

void check_level_partition(const Context& ctx, Builder& b) {
  const auto times = open_times(ctx.cfg.grids.t_grid);
  const double tol = ctx.cfg.tolerances.partition;
  const auto classes = disint::group_levels(ctx.plan, ctx.phi0);
  double within = kInf;
  for (const auto& c : classes) {
    if (c.members.size() < 2 && times.size() < 2) {
      continue;
    }
    const auto rep = disint::check_partition(ctx.plan, c, times, tol);
    if (rep.comparisons > 0) {
      within = std::min(within, rep.min_distance);
    }
    b.expect(rep.pass, "level a = " + fmt(c.a) + " meets itself");
  }
  const auto everyone = whole_plan(ctx.plan);
  double across = kInf;
  for (double t : times) {
    const auto rep = disint::check_partition(ctx.plan, everyone, {t}, tol);
    across = std::min(across, rep.min_distance);
    b.row("separation", -1, t, t, rep.min_distance);
    b.expect(rep.pass, "distinct geodesics meet at t = " + fmt(t));
  }
  b.metric("levels", static_cast<double>(classes.size()));
  b.metric("min_distance_within_level", std::isfinite(within) ? within : 0.0);
  b.metric("min_distance_across", std::isfinite(across) ? across : 0.0);
}

void check_lambda_cross(const Context& ctx, Builder& b) {
  const auto times = open_times(ctx.cfg.grids.t_grid);
  const auto Phi = flow::analytic_level(ctx.model);
  const std::size_t n = ctx.plan.size();
  struct Cell {
    double inc = kNaN;
    double soj = kNaN;
    std::string error;
  };
  std::vector<Cell> cells(n * times.size());
  parallel_for(cells.size(), ctx.jobs, [&](std::size_t k) {
    const std::size_t i = k / times.size();
    const double t = times[k % times.size()];
    const auto& g = ctx.plan.geodesic(i);
    try {
      const double hes = disint::lambda_hessian(ctx.model, g.x0(), t, i).value;
      const double inc = disint::lambda_incremental(g, i, t, ctx.cfg.grids.s_sequence, Phi).value;
      const double soj = disint::lambda_sojourn(g, i, t, ctx.cfg.grids.eps_sequence, Phi).value;
      cells[k].inc = inc / hes - 1.0;
      cells[k].soj = soj / hes - 1.0;
    } catch (const std::exception& e) {
      cells[k].error = e.what();
    }
  });
  double worst_inc = 0.0;
  double worst_soj = 0.0;
  std::size_t errors = 0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto i = static_cast<std::int64_t>(k / times.size());
    const double t = times[k % times.size()];
    if (!cells[k].error.empty()) {
      if (errors++ == 0) {
        b.fail("geodesic " + std::to_string(i) + " at t = " + fmt(t) + ": " + cells[k].error);
      }
      continue;
    }
    worst_inc = std::max(worst_inc, std::abs(cells[k].inc));
    worst_soj = std::max(worst_soj, std::abs(cells[k].soj));
    b.row("incremental_vs_hessian", i, t, t, cells[k].inc);
    b.row("sojourn_vs_hessian", i, t, t, cells[k].soj);
  }
  b.metric("max_incremental_delta", worst_inc);
  b.metric("max_sojourn_delta", worst_soj);
  b.metric("estimator_errors", static_cast<double>(errors));
  b.expect(!times.empty(), "no interior times");
  b.expect(worst_inc < ctx.cfg.tolerances.lambda_incremental, "incremental delta " + fmt(worst_inc));
  b.expect(worst_soj < ctx.cfg.tolerances.lambda_sojourn, "sojourn delta " + fmt(worst_soj));
}

void check_strip_ratio(const Context& ctx, Builder& b) {
  const double eps = ctx.cfg.grids.strip_eps;
  std::vector<double> times;
  for (double t : open_times(ctx.cfg.grids.t_grid)) {
    if (t + eps <= 1.0) {
      times.push_back(t);
    }
  }
  const std::size_t idx = representative(ctx);
  const Point& x0 = ctx.plan.geodesic(idx).x0();
  const double a = ctx.phi0[idx];
  std::vector<double> delta(times.size(), kNaN);
  std::vector<std::string> errors(times.size());
  parallel_for(times.size(), ctx.jobs, [&](std::size_t k) {
    disint::StripOptions opt;
    opt.eps = eps;
    opt.budget = ctx.cfg.grids.strip_budget;
    opt.seed = ctx.seed;
    opt.stream = ctx.stream + k;
    try {
      const auto r = disint::strip_conditionals(ctx.model, a, times[k], opt);
      delta[k] = r.ratio() / disint::lambda_hessian(ctx.model, x0, times[k], idx).value - 1.0;
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  });
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!errors[k].empty()) {
      b.fail("t = " + fmt(times[k]) + ": " + errors[k]);
      continue;
    }
    worst = std::max(worst, std::abs(delta[k]));
    b.row("strip_vs_hessian", static_cast<std::int64_t>(idx), times[k], times[k], delta[k]);
  }
  b.metric("level", a);
  b.metric("max_strip_delta", worst);
  b.expect(worst < ctx.cfg.tolerances.strip, "strip ratio delta " + fmt(worst));
}

void check_decomposition(const Context& ctx, Builder& b) {
  const auto records = all_records(ctx);
  double identity = 0.0;
  double drift = 0.0;
  double product = 0.0;
  for (const auto& r : records) {
    const auto i = static_cast<std::int64_t>(r.geodesic);
    for (std::size_t k = 0; k < r.t_grid.size(); ++k) {
      const double t = r.t_grid[k];
      const double id = r.rho[k] * r.lambda[k] / (r.C_a * r.h[k]) - 1.0;
      const double dr = r.c_local[k] / r.C_a - 1.0;
      const double pr = r.h[k] * r.g[k] - 1.0;
      b.row("identity", i, t, t, id);
      b.row("normalization_drift", i, t, t, dr);
      b.row("line_density_product", i, t, t, pr);
    }
    identity = std::max(identity, r.identity_residual());
    drift = std::max(drift, r.normalization_drift());
    product = std::max(product, r.product_residual());
  }
  b.metric("max_identity", identity);
  b.metric("max_drift_analytic", drift);
  b.metric("max_product", product);
  const auto& tol = ctx.cfg.tolerances;
  b.expect(identity < tol.decomposition, "identity residual " + fmt(identity));
  b.expect(drift < tol.drift_analytic, "analytic C(a) drift " + fmt(drift));
  b.expect(product < tol.decomposition, "h g product residual " + fmt(product));

  // Monte-Carlo C(a): common mu_0 samples at every time.
  const std::size_t idx = representative(ctx);
  const double a = ctx.phi0[idx];
  const auto& ts = ctx.cfg.grids.t_grid;
  std::vector<double> mass(ts.size(), kNaN);
  std::vector<std::string> errors(ts.size());
  parallel_for(ts.size(), ctx.jobs, [&](std::size_t k) {
    disint::StripOptions opt;
    opt.eps = ctx.cfg.grids.strip_eps;
    opt.budget = ctx.cfg.grids.strip_budget;
    opt.seed = ctx.seed;
    opt.stream = ctx.stream;
    try {
      mass[k] = disint::level_mass_density(ctx.model, a, ts[k], opt);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  });
  double mc = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    if (!errors[k].empty()) {
      b.fail("Monte-Carlo C(a) at t = " + fmt(ts[k]) + ": " + errors[k]);
      continue;
    }
    const double d = mass[k] / mass[0] - 1.0;
    mc = std::max(mc, std::abs(d));
    b.row("mc_drift", static_cast<std::int64_t>(idx), ts[k], ts[k], d);
  }
  b.metric("max_drift_mc", mc);
  b.metric("mc_level_mass", mass[0]);
  b.expect(mc < tol.drift_mc, "Monte-Carlo C(a) drift " + fmt(mc));
}

void check_cd_star_reduced(const Context& ctx, Builder& b) {
  decomp::ResidualReport all;
  for (const auto& r : all_records(ctx)) {
    const auto rep = decomp::check_cd_star_reduced(r, ctx.cfg.K, ctx.cfg.N);
    all.samples.insert(all.samples.end(), rep.samples.begin(), rep.samples.end());
  }
  add_report_rows(b, "cd_star_midpoint", all);
  judge_inequality(b, ctx, "cd_star_reduced", all);
  // Consistency of the split (1/2) coefficient with tau.
  double split = 0.0;
  const distortion::DistortionParams p(ctx.cfg.K, ctx.cfg.N);
  for (double L : ctx.lengths) {
    const auto tau = distortion::tau(p, 0.5, L);
    const double direct = tau.to_double();
    const double assembled = decomp::tau_half_split(ctx.cfg.K, ctx.cfg.N, L);
    if (direct != assembled && !(std::isinf(direct) && std::isinf(assembled))) {
      split = std::max(split, std::abs(direct - assembled));
    }
  }
  b.metric("tau_split_mismatch", split);
  b.expect(split == 0.0, "split tau differs from tau by " + fmt(split));
}

void check_cd_pointwise(const Context& ctx, Builder& b) {
  const auto rep = decomp::check_cd_pointwise(ctx.model, ctx.plan, ctx.cfg.K, ctx.cfg.N, ctx.cfg.grids.t_grid);
  add_report_rows(b, "cd_pointwise", rep);
  judge_inequality(b, ctx, "cd_pointwise", rep);
}

void check_cd_sharpness(const Context& ctx, Builder& b) {
  const double K = ctx.cfg.sharpness_K;
  const auto rep = decomp::check_cd_pointwise(ctx.model, ctx.plan, K, ctx.cfg.N, ctx.cfg.grids.t_grid);
  add_report_rows(b, "cd_pointwise_probe", rep);
  const double min = rep.min_residual();
  std::size_t negative = 0;
  for (const auto& s : rep.samples) {
    negative += s.value < 0.0 ? 1 : 0;
  }
  b.metric("probe_K", K);
  b.metric("min_residual", min);
  b.metric("negative_residuals", static_cast<double>(negative));
  if (negative > 0) {
    b.warn("CD(" + fmt(K) + ", " + fmt(ctx.cfg.N) + ") violated as expected (min residual " + fmt(min) + ")");
  } else {
    b.note("no violation found for K = " + fmt(K));
  }
}

void check_lambda_linear(const Context& ctx, Builder& b) {
  const auto orient = ctx.cfg.orientation == "non_increasing" ? decomp::Orientation::NonIncreasing
                                                              : decomp::Orientation::NonDecreasing;
  const auto special = decomp::check_special_class(ctx.phi0, ctx.lengths, orient);
  b.metric("levels", static_cast<double>(special.levels));
  b.metric("max_length_spread", special.max_length_spread);
  b.metric("worst_level_map_step", special.worst_level_map_step);
  b.metric("alternative_reading_holds", special.alternative_reading_holds ? 1.0 : 0.0);
  b.metric("in_class", special.in_class() ? 1.0 : 0.0);
  const auto records =
      decomp::build_decomposition(ctx.model, ctx.plan, whole_plan(ctx.plan), lambda_fn(ctx), ctx.cfg.grids.t_grid);
  const auto v = decomp::check_lambda_linear(records, ctx.cfg.tolerances.linear, special);
  b.metric("max_deviation", v.max_deviation);
  b.metric("worst_geodesic", static_cast<double>(v.worst_geodesic));
  b.expect(v.pass, "lambda deviates from affine by " + fmt(v.max_deviation));
}

void check_w2_construction(const Context& ctx, Builder& b) {
  const auto classes = disint::group_levels(ctx.plan, ctx.phi0);
  const auto best = std::max_element(classes.begin(), classes.end(), [](const auto& x, const auto& y) {
    return x.members.size() < y.members.size();
  });
  const auto& w = ctx.cfg.w2;
  const double a = best->a;
  const decomp::ValueInterval first{a - w.first_hi, a - w.first_lo};
  const decomp::ValueInterval second{a - w.second_hi, a - w.second_lo};
  const auto c = decomp::build_w2_from_monotone(ctx.plan, *best, first, second, w.n_time, w.n_samples);
  const auto rep = decomp::check_w2_geodesic(c);
  b.metric("level", a);
  b.metric("members", static_cast<double>(c.members.size()));
  b.metric("excluded", static_cast<double>(c.excluded.size()));
  b.metric("w2_endpoints", rep.w2_endpoints);
  b.metric("max_deviation", rep.max_deviation);
  b.metric("cycles_checked", static_cast<double>(rep.monotone.cycles_checked));
  b.metric("cycle_margin", rep.monotone.margin);
  b.row("w2_deviation", -1, 0.0, 1.0, rep.max_deviation);
  b.expect(rep.max_deviation < ctx.cfg.tolerances.w2, "W2 deviation " + fmt(rep.max_deviation));
  b.expect(rep.monotone.pass, "pair set is not d^2-cyclically monotone");
  if (!c.excluded.empty()) {
    b.warn(std::to_string(c.excluded.size()) + " members excluded (intervals outside their range)");
  }
}

void check_mcp_bound(const Context& ctx, Builder& b) {
  const auto& ts = ctx.cfg.grids.t_grid;
  decomp::ResidualReport lower;
  decomp::ResidualReport upper;
  for (std::size_t i = 0; i < ctx.plan.size(); ++i) {
    const Point& x0 = ctx.plan.geodesic(i).x0();
    std::vector<double> tau;
    std::vector<double> g;
    for (double t : ts) {
      if (t > 0.0 && t < 1.0) {
        tau.push_back(t);
        g.push_back(decomp::line_density(ctx.model, x0, t));
      }
    }
    const auto rep = decomp::check_mcp_bound(tau, g, ctx.lengths[i], ctx.cfg.K, ctx.cfg.N, i);
    for (std::size_t k = 0; k < rep.samples.size(); ++k) {
      (k % 2 == 0 ? lower : upper).samples.push_back(rep.samples[k]);
    }
  }
  add_report_rows(b, "mcp_lower", lower);
  add_report_rows(b, "mcp_upper", upper);
  const double min = std::min(lower.min_residual(), upper.min_residual());
  b.metric("min_lower", lower.min_residual());
  b.metric("min_upper", upper.min_residual());
  b.expect(!lower.samples.empty(), "no interior time pairs");
  b.expect(min >= -ctx.cfg.tolerances.mcp, "min residual " + fmt(min));
}

using CheckFn = void (*)(const Context&, Builder&);

CheckFn dispatch(const std::string& name) {
  static const std::map<std::string, CheckFn> table{
      {"kantorovich_duality", check_kantorovich_duality},
      {"geodesic_w2", check_geodesic_w2},
      {"hopf_lax", check_hopf_lax},
      {"phi_level", check_phi_level},
      {"phi_monotone", check_phi_monotone},
      {"assumptions", check_assumptions},
      {"level_partition", check_level_partition},
      {"lambda_cross", check_lambda_cross},
      {"strip_ratio", check_strip_ratio},
      {"decomposition", check_decomposition},
      {"cd_star_reduced", check_cd_star_reduced},
      {"cd_pointwise", check_cd_pointwise},
      {"cd_sharpness", check_cd_sharpness},
      {"lambda_linear", check_lambda_linear},
      {"w2_construction", check_w2_construction},
      {"mcp_bound", check_mcp_bound}};
  return table.at(name);
}

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::Pass:
      return "pass";
    case Status::Fail:
      return "fail";
    case Status::Warn:
      return "warn";
  }
  return "fail";
}

Status status_from_string(const std::string& s) {
  if (s == "pass") {
    return Status::Pass;
  }
  if (s == "warn") {
    return Status::Warn;
  }
  if (s == "fail") {
    return Status::Fail;
  }
  throw DomainError("unknown status '" + s + "'");
}

double CheckResult::metric(const std::string& key) const {
  for (const auto& [k, v] : metrics) {
    if (k == key) {
      return v;
    }
  }
  return kNaN;
}

const CheckResult* RunReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) {
      return &c;
    }
  }
  return nullptr;
}

bool RunReport::any_failed() const {
  return std::any_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.status == Status::Fail; });
}

RunReport run(const ScenarioConfig& config, const RunOptions& options) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  ScenarioConfig cfg = config;
  if (options.seed) {
    cfg.grids.seed = *options.seed;
  }
  RunReport report;
  report.scenario = cfg.name;
  report.seed = cfg.grids.seed;
  report.config = to_json(cfg);

  const auto model = build_model(cfg);
  const auto plan = build_plan(*model, cfg.grids.geodesics_per_axis);
  Context ctx{cfg, *model, plan, {}, {}, cfg.grids.seed, resolve_jobs(options.jobs), 0};
  for (const auto& g : plan.geodesics()) {
    ctx.phi0.push_back(model->phi(g.x0()));
    ctx.lengths.push_back(g.length());
  }

  const auto& names = check_names();
  for (std::size_t k = 0; k < names.size(); ++k) {
    const std::string& name = names[k];
    if (!cfg.has_check(name)) {
      continue;
    }
    ctx.stream = static_cast<std::uint64_t>(k + 1) << 32;
    const auto t0 = clock::now();
    Builder b(name);
    const bool reject_expected = listed(cfg.expect_rejection, name);
    try {
      dispatch(name)(ctx, b);
      if (reject_expected) {
        b.fail("precondition was expected to reject this scenario");
      }
    } catch (const PreconditionError& e) {
      b.metric("rejected", 1.0);
      if (reject_expected) {
        b.note(std::string("rejected as expected: ") + e.what());
      } else {
        b.fail(std::string("precondition: ") + e.what());
      }
    } catch (const std::exception& e) {
      b.fail(e.what());
    }
    auto result = b.finish();
    if (options.timing) {
      result.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    }
    report.checks.push_back(std::move(result));
  }
  if (options.timing) {
    report.seconds = std::chrono::duration<double>(clock::now() - start).count();
  }
  return report;
}

}  // namespace geodecomp::harness
