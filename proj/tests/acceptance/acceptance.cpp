// Acceptance suite: one pass/fail line per criterion. Exit status is 0 only
// when every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "geodecomp/distortion.hpp"
#include "geodecomp/harness_config.hpp"
#include "geodecomp/harness_emit.hpp"
#include "geodecomp/harness_run.hpp"
#include "geodecomp/ot_core.hpp"
#include "geodecomp/parallel.hpp"
#include "geodecomp/potential_flow.hpp"
#include "geodecomp/transport_models.hpp"

using namespace geodecomp;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Notes {
 public:
  void add(bool ok, const std::string& text) {
    pass_ = pass_ && ok;
    if (!out_.str().empty()) {
      out_ << "; ";
    }
    out_ << (ok ? "" : "FAILED ") << text;
  }
  Outcome outcome() const { return {pass_, out_.str()}; }

 private:
  bool pass_ = true;
  std::ostringstream out_;
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

const std::vector<std::string> kScenarios{"translation",  "dilation",     "radial", "sine_power_2",
                                          "sine_power_3", "sine_power_4", "cone",   "crossed_levels"};

struct Suite {
  std::string dir;
  std::size_t jobs = 1;

  json load(const std::string& name) const {
    std::ifstream in(dir + "/" + name + ".json");
    if (!in) {
      throw std::runtime_error("cannot open scenario " + name);
    }
    return json::parse(in);
  }

  harness::RunReport run(const json& j) const {
    harness::RunOptions opt;
    opt.jobs = jobs;
    return harness::run(harness::parse_config(j), opt);
  }

  /// Runs only `checks` on a scenario, keeping expectations that apply to them.
  harness::RunReport run_checks(const std::string& name, const std::vector<std::string>& checks,
                                const std::function<void(json&)>& edit = {}) const {
    json j = load(name);
    j["checks"] = checks;
    for (const char* key : {"expect_rejection", "expect_equality"}) {
      json kept = json::array();
      for (const auto& c : j.value(key, json::array())) {
        if (std::find(checks.begin(), checks.end(), c.get<std::string>()) != checks.end()) {
          kept.push_back(c);
        }
      }
      j[key] = kept;
    }
    if (edit) {
      edit(j);
    }
    return run(j);
  }
};

void record_check(Notes& notes, const std::string& scenario, const harness::RunReport& r, const std::string& check) {
  const auto* c = r.find(check);
  if (c == nullptr) {
    notes.add(false, scenario + "/" + check + " did not run");
    return;
  }
  if (c->status == harness::Status::Fail) {
    notes.add(false, scenario + "/" + check + ": " + c->message);
  }
}

// 1. Distortion coefficients.
Outcome distortion_laws(const Suite&) {
  using namespace distortion;
  Notes notes;
  double worst_tau = 0.0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      for (int k = 0; k < 10; ++k) {
        const double N = 1.0 + i;
        const double t = j / 9.0;
        const double theta = 0.5 * k;
        worst_tau = std::max(worst_tau, std::abs(tau(DistortionParams(0.0, N), t, theta).value() - t));
      }
    }
  }
  notes.add(worst_tau <= 1e-12, "tau_{0,N} - t max " + sci(worst_tau));

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_ode = 0.0;
  double lo_ratio = 1e300;
  double hi_ratio = 0.0;
  for (int c = 0; c < 20; ++c) {
    const double K = -4.0 + 8.0 * u(rng);
    const double N = 1.0 + 4.0 * u(rng);
    // Subcritical: K theta^2 below N pi^2 with margin.
    double theta = 0.2 + 1.8 * u(rng);
    if (K > 0.0) {
      theta = std::min(theta, 0.8 * std::sqrt(N / K) * 3.14159);
    }
    const DistortionParams p(K, N);
    worst_ode = std::max(worst_ode, ode_residual(p, theta, 1e-4));
    const double ratio = ode_residual(p, theta, 1e-2) / ode_residual(p, theta, 5e-3);
    lo_ratio = std::min(lo_ratio, ratio);
    hi_ratio = std::max(hi_ratio, ratio);
  }
  notes.add(worst_ode < 1e-6, "ode residual max " + sci(worst_ode) + " at h = 1e-4");
  notes.add(lo_ratio >= 3.2 && hi_ratio <= 4.8, "h/2 ratio in [" + sci(lo_ratio) + ", " + sci(hi_ratio) + "]");
  return notes.outcome();
}

double brute_force(const std::vector<Point>& x, const std::vector<Point>& y, const ot::CostFunction& c) {
  std::vector<std::size_t> perm(x.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      s += c(x[i], y[perm[i]]);
    }
    best = std::min(best, s / static_cast<double>(x.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// 2. Exact discrete transport.
Outcome duality(const Suite&) {
  Notes notes;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> size(2, 50);
  auto points = [&](std::size_t n, int d) {
    std::vector<Point> out;
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(Point::NullaryExpr(d, [&](Eigen::Index) { return u(rng); }));
    }
    return out;
  };
  auto weights = [&](std::size_t n) {
    std::vector<double> w(n);
    for (auto& x : w) {
      x = 1.1 + u(rng);
    }
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) {
      x /= s;
    }
    return w;
  };
  const auto cost = ot::half_squared_distance();
  double worst_gap = 0.0;
  std::size_t cyc_fail = 0;
  std::size_t small = 0;
  std::size_t small_fail = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = size(rng);
    const int d = 1 + static_cast<int>(rng() % 3);
    const auto x = points(n, d);
    if (n <= 8) {
      // Equal weights, square: compare with every permutation.
      const auto y = points(n, d);
      const auto c = ot::solve_ot(ot::DiscreteMeasure::uniform(x), ot::DiscreteMeasure::uniform(y), cost);
      worst_gap = std::max(worst_gap, std::abs(c.duality_gap()));
      ++small;
      if (std::abs(c.cost_total - brute_force(x, y, cost)) > 1e-12) {
        ++small_fail;
      }
      const auto mu = ot::DiscreteMeasure::uniform(x);
      const auto nu = ot::DiscreteMeasure::uniform(y);
      cyc_fail += ot::check_cyclical_monotonicity(ot::support_pairs(c, mu, nu), cost).pass ? 0 : 1;
      continue;
    }
    const std::size_t m = size(rng);
    const ot::DiscreteMeasure mu(x, weights(n));
    const ot::DiscreteMeasure nu(points(m, d), weights(m));
    const auto c = ot::solve_ot(mu, nu, cost);
    worst_gap = std::max(worst_gap, std::abs(c.duality_gap()));
    ot::CycleOptions opt;
    opt.max_cycle = 3;
    cyc_fail += ot::check_cyclical_monotonicity(ot::support_pairs(c, mu, nu), cost, opt).pass ? 0 : 1;
  }
  notes.add(worst_gap < 1e-9, "max duality gap " + sci(worst_gap));
  notes.add(cyc_fail == 0, std::to_string(100 - cyc_fail) + "/100 supports 3-cycle monotone");
  notes.add(small > 0 && small_fail == 0,
            std::to_string(small - small_fail) + "/" + std::to_string(small) + " n <= 8 instances match brute force");
  return notes.outcome();
}

// 3. Hopf-Lax evolution identities and grid refinement.
Outcome hopf_lax_identities(const Suite& s) {
  Notes notes;
  const std::vector<double> ts{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  for (const std::string name : {"translation", "dilation"}) {
    auto cfg = harness::parse_config(s.load(name));
    const auto model = harness::build_model(cfg);
    const auto plan = harness::build_plan(*model, 8);
    flow::PotentialField phic;
    phic.provenance = flow::Provenance::Analytic;
    for (const auto& g : plan.geodesics()) {
      phic.points.push_back(g.x1());
      phic.values.push_back(model->phi_c(g.x1()));
    }
    double evo = 0.0;
    double aff = 0.0;
    for (double t : ts) {
      const auto phit = flow::evolve_kantorovich(phic, t, plan);
      for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto& g = plan.geodesic(i);
        const double L = g.length();
        evo = std::max(evo, std::abs(phit.values[i] - (model->phi(g.x0()) - 0.5 * t * L * L)));
        const double chord = (1.0 - t) * model->phi(g.x0()) + t * (-model->phi_c(g.x1()));
        aff = std::max(aff, std::abs(phit.values[i] - chord));
      }
    }
    notes.add(plan.size() == 64, name + " " + std::to_string(plan.size()) + " geodesics");
    notes.add(evo < 1e-6, name + " evolution " + sci(evo));
    notes.add(aff < 1e-6, name + " affinity " + sci(aff));
  }
  // Grid doubling of the sampled evolution, on the one-dimensional models.
  const auto tr = models::make_translation(1, Point::Constant(1, 0.5), Point::Constant(1, 0.0), Point::Constant(1, 1.0));
  const auto dil = models::make_dilation(1, 0.5, 0.5, 1.5);
  for (const models::TransportModel* m : {tr.get(), dil.get()}) {
    const double r = flow::sampled_evolution_error(*m, 64, ts, 129) / flow::sampled_evolution_error(*m, 128, ts, 129);
    notes.add(std::abs(r / 2.0 - 1.0) <= 0.3, m->name() + " 1D doubling ratio " + sci(r));
  }
  // Informational: the two-dimensional polar grid converges faster.
  const auto dil2 = models::make_dilation(2, 0.5, 0.5, 1.5);
  const double r2 = flow::sampled_evolution_error(*dil2, 8, ts, 17) / flow::sampled_evolution_error(*dil2, 16, ts, 17);
  notes.add(true, "2D dilation doubling ratio " + sci(r2) + " (informational)");
  return notes.outcome();
}

// 4. lambda estimators against each other and the strips.
Outcome lambda_cross(const Suite& s) {
  Notes notes;
  for (const std::string name : {"translation", "dilation", "radial"}) {
    const auto r = s.run_checks(name, {"lambda_cross", "strip_ratio"}, [](json& j) {
      j["tolerances"]["lambda_incremental"] = 1e-4;
      j["tolerances"]["lambda_sojourn"] = 1e-3;
      j["tolerances"]["strip"] = 5e-2;
    });
    record_check(notes, name, r, "lambda_cross");
    record_check(notes, name, r, "strip_ratio");
    const auto* lc = r.find("lambda_cross");
    const auto* st = r.find("strip_ratio");
    if (lc && st) {
      notes.add(true, name + " inc " + sci(lc->metric("max_incremental_delta")) + " soj " +
                          sci(lc->metric("max_sojourn_delta")) + " strip " + sci(st->metric("max_strip_delta")));
    }
  }
  return notes.outcome();
}

// 5. Decomposition identity and conservation of C_a.
Outcome decomposition(const Suite& s) {
  Notes notes;
  double id = 0.0;
  double da = 0.0;
  double dm = 0.0;
  for (const auto& name : kScenarios) {
    const auto r = s.run_checks(name, {"decomposition"}, [](json& j) {
      j["tolerances"]["decomposition"] = 1e-6;
      j["tolerances"]["drift_analytic"] = 1e-8;
      j["tolerances"]["drift_mc"] = 1e-3;
    });
    record_check(notes, name, r, "decomposition");
    if (const auto* c = r.find("decomposition")) {
      id = std::max(id, c->metric("max_identity"));
      da = std::max(da, c->metric("max_drift_analytic"));
      dm = std::max(dm, c->metric("max_drift_mc"));
    }
  }
  notes.add(id < 1e-6 && da < 1e-8 && dm < 1e-3, std::to_string(kScenarios.size()) + " scenarios: identity " + sci(id) +
                                                     ", drift " + sci(da) + " analytic, " + sci(dm) + " Monte-Carlo");
  return notes.outcome();
}

// 6. Curvature-dimension inequalities.
Outcome cd_inequalities(const Suite& s) {
  Notes notes;
  for (const std::string name : {"dilation", "translation"}) {
    const auto r = s.run_checks(name, {"cd_star_reduced"}, [](json& j) {
      j["K"] = 0.0;
      j["tolerances"]["cd"] = 1e-8;
      j["tolerances"]["equality"] = 1e-10;
      j["expect_equality"] = {"cd_star_reduced"};
    });
    record_check(notes, name, r, "cd_star_reduced");
    if (const auto* c = r.find("cd_star_reduced")) {
      notes.add(true, name + " CD* min " + sci(c->metric("min_residual")) + " max|.| " +
                          sci(c->metric("max_abs_residual")));
    }
  }
  for (int N : {2, 3, 4}) {
    const std::string name = "sine_power_" + std::to_string(N);
    const auto r = s.run_checks(name, {"cd_pointwise", "cd_sharpness"}, [N](json& j) {
      j["K"] = N - 1.0;
      j["sharpness_K"] = N + 1.0;
      j["grids"]["geodesics_per_axis"] = 64;
      j["tolerances"]["cd"] = 1e-8;
    });
    record_check(notes, name, r, "cd_pointwise");
    const auto* cd = r.find("cd_pointwise");
    const auto* sh = r.find("cd_sharpness");
    if (cd && sh) {
      const bool probe = sh->status == harness::Status::Warn && sh->metric("min_residual") < 0.0;
      notes.add(cd->metric("min_residual") >= -1e-8, name + " CD min " + sci(cd->metric("min_residual")));
      notes.add(probe, name + " K = N+1 probe min " + sci(sh->metric("min_residual")) + " (" +
                           harness::to_string(sh->status) + ")");
    }
  }
  return notes.outcome();
}

// 7. lambda linearity and the precondition rejection.
Outcome lambda_linear(const Suite& s) {
  Notes notes;
  for (const std::string name : {"dilation", "radial"}) {
    const auto r = s.run_checks(name, {"lambda_linear"}, [](json& j) { j["tolerances"]["linear"] = 1e-8; });
    record_check(notes, name, r, "lambda_linear");
    if (const auto* c = r.find("lambda_linear")) {
      notes.add(true, name + " deviation " + sci(c->metric("max_deviation")));
    }
  }
  json j = s.load("crossed_levels");
  j["checks"] = {"lambda_linear"};
  j["expect_rejection"] = json::array();
  j["expect_equality"] = json::array();
  const auto r = s.run(j);
  const auto* c = r.find("lambda_linear");
  notes.add(c && c->status == harness::Status::Fail && c->metric("rejected") == 1.0,
            "crossed_levels rejected by the precondition");
  return notes.outcome();
}

// 8. W2 construction from monotone level intervals.
Outcome w2_construction(const Suite& s) {
  Notes notes;
  double worst = 0.0;
  std::size_t n = 0;
  for (const auto& name : kScenarios) {
    const json j = s.load(name);
    if (!j.contains("w2")) {
      continue;
    }
    const auto r = s.run_checks(name, {"w2_construction"}, [](json& k) {
      k["w2"]["n_time"] = 5;
      k["tolerances"]["w2"] = 1e-4;
    });
    record_check(notes, name, r, "w2_construction");
    if (const auto* c = r.find("w2_construction")) {
      worst = std::max(worst, c->metric("max_deviation"));
      ++n;
    }
  }
  notes.add(n >= 3 && worst < 1e-4,
            std::to_string(n) + " scenarios d^2-monotone, max W2 deviation " + sci(worst));
  return notes.outcome();
}

// 9. Determinism of the full suite.
Outcome determinism(const Suite& s) {
  Notes notes;
  Suite one = s;
  one.jobs = 1;
  Suite many = s;
  many.jobs = std::max<std::size_t>(4, resolve_jobs(0));
  std::size_t same = 0;
  for (const auto& name : kScenarios) {
    const json j = s.load(name);
    const auto a = one.run(j);
    const auto b = many.run(j);
    if (harness::render(a, harness::Format::Json) == harness::render(b, harness::Format::Json) &&
        harness::render(a, harness::Format::Csv) == harness::render(b, harness::Format::Csv)) {
      ++same;
    } else {
      notes.add(false, name + " reports differ");
    }
  }
  notes.add(same == kScenarios.size(), std::to_string(same) + "/" + std::to_string(kScenarios.size()) +
                                           " scenarios byte-identical at jobs 1 and " + std::to_string(many.jobs));
  return notes.outcome();
}

struct Criterion {
  int id;
  const char* title;
  double limit_seconds;  // 0 = no limit
  Outcome (*fn)(const Suite&);
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geodecomp acceptance suite"};
  Suite suite;
  suite.dir = "scenarios";
  suite.jobs = 0;
  std::vector<int> only;
  app.add_option("--scenarios", suite.dir, "Scenario directory");
  app.add_option("--jobs", suite.jobs, "Worker threads for timed criteria (0 = all cores)");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  suite.jobs = resolve_jobs(suite.jobs);

  const std::vector<Criterion> criteria{
      {1, "distortion laws", 1.0, distortion_laws},
      {2, "duality and monotonicity", 30.0, duality},
      {3, "Hopf-Lax identities", 10.0, hopf_lax_identities},
      {4, "lambda cross-validation", 60.0, lambda_cross},
      {5, "decomposition identity", 0.0, decomposition},
      {6, "CD inequalities", 60.0, cd_inequalities},
      {7, "lambda linearity", 0.0, lambda_linear},
      {8, "W2 construction", 30.0, w2_construction},
      {9, "determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.fn(suite);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = sci(secs) + " s";
    if (c.limit_seconds > 0.0) {
      timing += " / limit " + sci(c.limit_seconds) + " s";
      if (secs > c.limit_seconds) {
        out.pass = false;
        out.detail += "; FAILED runtime over limit";
      }
    }
    failed += out.pass ? 0 : 1;
    std::printf("criterion %d %-26s %s  %s  [%s]\n", c.id, c.title, out.pass ? "PASS" : "FAIL", out.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
