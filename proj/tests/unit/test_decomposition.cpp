#include <doctest.h>

#include <cmath>
#include <numbers>

#include "geodecomp/decomposition.hpp"
#include "geodecomp/distortion.hpp"

using namespace geodecomp;
using namespace geodecomp::decomp;

namespace {

Point p1(double x) { return Point::Constant(1, x); }

Point p2(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

spaces::DynamicalPlan plan_of(const models::TransportModel& m, std::size_t per_axis) {
  const auto src = m.source_grid(per_axis);
  std::vector<spaces::Geodesic> gs;
  for (const auto& x : src.points) {
    gs.emplace_back(x, m.map(x));
  }
  return {gs, src.weights};
}

std::vector<double> start_levels(const models::TransportModel& m, const spaces::DynamicalPlan& plan) {
  std::vector<double> out;
  for (const auto& g : plan.geodesics()) {
    out.push_back(m.phi(g.x0()));
  }
  return out;
}

LambdaFn analytic_lambda(const models::TransportModel& m) {
  return [&m](std::size_t, const Point& x0, double t) { return 1.0 / m.inv_lambda(x0, t); };
}

std::vector<double> grid(std::size_t n) {
  std::vector<double> ts;
  for (std::size_t k = 0; k <= n; ++k) {
    ts.push_back(static_cast<double>(k) / static_cast<double>(n));
  }
  return ts;
}

}  // namespace

TEST_CASE("dilation decomposition closed forms") {
  const double alpha = 0.5;
  const auto m = models::make_dilation(2, alpha, 0.5, 1.5);
  const auto plan = plan_of(*m, 6);
  const auto ts = grid(10);
  for (const auto& cls : disint::group_levels(plan, start_levels(*m, plan))) {
    const auto recs = build_decomposition(*m, plan, cls, analytic_lambda(*m), ts);
    REQUIRE(recs.size() == cls.members.size());
    for (const auto& r : recs) {
      CHECK(r.identity_residual() < 1e-12);
      CHECK(r.normalization_drift() < 1e-12);
      CHECK(r.product_residual() < 1e-12);
      for (std::size_t k = 0; k < ts.size(); ++k) {
        // h is proportional to (1 - t alpha)^{-(N-1)}.
        CHECK(r.h[k] * (1 - ts[k] * alpha) == doctest::Approx(r.h[0]).epsilon(1e-12));
        CHECK(r.rho[k] == doctest::Approx(r.rho[0] / std::pow(1 - ts[k] * alpha, 2)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("translation decomposition is constant in time") {
  const auto m = models::make_translation(2, p2(0.6, 0.3), p2(0, 0), p2(1, 1));
  const auto plan = plan_of(*m, 4);
  const auto cls = disint::group_levels(plan, start_levels(*m, plan)).front();
  for (const auto& r : build_decomposition(*m, plan, cls, analytic_lambda(*m), grid(5))) {
    for (std::size_t k = 0; k < r.t_grid.size(); ++k) {
      CHECK(r.rho[k] == doctest::Approx(r.rho[0]));
      CHECK(r.lambda[k] == doctest::Approx(r.lambda[0]));
      CHECK(r.h[k] == doctest::Approx(r.h[0]));
    }
    CHECK(r.L == doctest::Approx(std::hypot(0.6, 0.3)));
  }
  // A single time: h = rho lambda / C_a.
  for (const auto& r : build_decomposition(*m, plan, cls, analytic_lambda(*m), {0.0})) {
    CHECK(r.h[0] == doctest::Approx(r.rho[0] * r.lambda[0] / r.C_a));
  }
}

TEST_CASE("normalization is conserved and the line density matches its closed form") {
  const double alpha = 0.4;
  const auto m = models::make_dilation(3, alpha, 0.5, 1.5);
  const Point x = Point::Constant(3, 0.5);
  const double c0 = local_normalization(*m, x, 0.0);
  for (double t : {0.2, 0.5, 0.9}) {
    CHECK(local_normalization(*m, x, t) == doctest::Approx(c0).epsilon(1e-12));
    // |det[J B | grad phi]| = (1 - t alpha)^{N-1} alpha |x|.
    CHECK(line_density(*m, x, t) == doctest::Approx(std::pow(1 - t * alpha, 2) * alpha * x.norm()).epsilon(1e-12));
  }
}

TEST_CASE("midpoint CD* equality for dilation and translation") {
  const auto dil = models::make_dilation(2, 0.5, 0.5, 1.5);
  const auto tr = models::make_translation(3, Point::Constant(3, 0.2), Point::Zero(3), Point::Ones(3));
  for (const models::TransportModel* m : {dil.get(), tr.get()}) {
    const auto plan = plan_of(*m, 4);
    const double N = m->dim();
    const auto cls = disint::group_levels(plan, start_levels(*m, plan)).front();
    for (const auto& r : build_decomposition(*m, plan, cls, analytic_lambda(*m), grid(10))) {
      const auto rep = check_cd_star_reduced(r, 0.0, N);
      CHECK_FALSE(rep.samples.empty());
      CHECK(rep.max_abs_residual() <= 1e-10);
    }
  }
}

TEST_CASE("tau split is bit identical") {
  for (double K : {-1.0, 0.0, 0.7, 2.0}) {
    for (double N : {2.0, 3.0, 4.5}) {
      for (double theta : {0.3, 1.0}) {
        CHECK(tau_half_split(K, N, theta) == distortion::tau(distortion::DistortionParams(K, N), 0.5, theta).value());
      }
    }
  }
}

TEST_CASE("pointwise CD equality cases") {
  const auto tr = models::make_translation(2, p2(0.6, 0.3), p2(0, 0), p2(1, 1));
  const auto dil = models::make_dilation(2, 0.5, 0.5, 1.5);
  for (const models::TransportModel* m : {tr.get(), dil.get()}) {
    const auto rep = check_cd_pointwise(*m, plan_of(*m, 4), 0.0, 2.0, grid(10));
    CHECK(rep.max_abs_residual() <= 1e-10);
  }
}

TEST_CASE("pointwise CD on the sine power interval and its sharpness") {
  const double N = 3;
  const auto space = spaces::ModelSpace::sine_power(N);
  const auto m = models::make_quantile_1d(space, 0.5, 1.1, 1.4, 2.2);
  const auto plan = plan_of(*m, 64);
  CHECK(check_cd_pointwise(*m, plan, N - 1, N, grid(10)).min_residual() >= -1e-8);
  CHECK(check_cd_pointwise(*m, plan, N + 1, N, grid(10)).min_residual() < 0.0);
}

TEST_CASE("special class and lambda linearity") {
  const auto ts = grid(10);
  SUBCASE("dilation") {
    const auto m = models::make_dilation(2, 0.5, 0.5, 1.5);
    const auto plan = plan_of(*m, 4);
    const auto phi0 = start_levels(*m, plan);
    std::vector<double> L;
    for (const auto& g : plan.geodesics()) {
      L.push_back(g.length());
    }
    const auto sc = check_special_class(phi0, L);
    CHECK(sc.in_class());
    std::vector<DecompositionRecord> recs;
    for (const auto& cls : disint::group_levels(plan, phi0)) {
      for (auto& r : build_decomposition(*m, plan, cls, analytic_lambda(*m), ts)) {
        recs.push_back(r);
      }
    }
    const auto v = check_lambda_linear(recs, 1e-8, sc);
    CHECK(v.pass);
    CHECK(v.max_deviation < 1e-10);
  }
  SUBCASE("translation") {
    const auto m = models::make_translation(2, p2(0.6, 0.3), p2(0, 0), p2(1, 1));
    const auto plan = plan_of(*m, 4);
    const auto phi0 = start_levels(*m, plan);
    std::vector<double> L(plan.size(), std::hypot(0.6, 0.3));
    const auto sc = check_special_class(phi0, L);
    std::vector<DecompositionRecord> recs;
    for (const auto& cls : disint::group_levels(plan, phi0)) {
      for (auto& r : build_decomposition(*m, plan, cls, analytic_lambda(*m), ts)) {
        recs.push_back(r);
      }
    }
    CHECK(check_lambda_linear(recs, 1e-8, sc).max_deviation < 1e-14);
  }
  SUBCASE("radial to point: L = sqrt(2 phi)") {
    const auto m = models::make_radial_to_point(p2(0, 0), 0.5, 1.5);
    const auto plan = plan_of(*m, 4);
    const auto phi0 = start_levels(*m, plan);
    std::vector<double> L;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      L.push_back(plan.geodesic(i).length());
      CHECK(L.back() == doctest::Approx(std::sqrt(2 * phi0[i])));
    }
    CHECK(check_special_class(phi0, L).in_class());
  }
}

TEST_CASE("crossed levels are outside the special class") {
  // Same level, different lengths.
  const auto sc = check_special_class({0.0, 0.0, 1.0}, {1.0, 2.0, 1.0});
  CHECK_FALSE(sc.length_is_function_of_level);
  CHECK_THROWS_AS(check_lambda_linear({}, 1e-8, sc), PreconditionError);
  // a - f^2 / 2 decreasing.
  const auto dec = check_special_class({0.0, 1.0, 2.0}, {0.0, 2.0, 3.0});
  CHECK_FALSE(dec.level_map_monotone);
  CHECK(check_special_class({0.0, 1.0, 2.0}, {0.0, 2.0, 3.0}, Orientation::NonIncreasing).level_map_monotone);
}

TEST_CASE("W2 construction on a single geodesic") {
  const spaces::DynamicalPlan plan({spaces::Geodesic(p1(0), p1(1))}, {1.0});
  disint::LevelClass cls;
  cls.a = 0.0;
  cls.members = {0};
  cls.weight = 1.0;
  const auto c = build_w2_from_monotone(plan, cls, {-0.3, -0.1}, {-0.8, -0.5}, 5, 6);
  const auto rep = check_w2_geodesic(c);
  CHECK(rep.max_deviation < 1e-12);
  CHECK(rep.monotone.pass);
  // Segment [0.1, 0.3] slides to [0.5, 0.8]; the uniform samples move affinely.
  CHECK(rep.w2_endpoints > 0.3);
  const auto still = check_w2_geodesic(build_w2_from_monotone(plan, cls, {-0.3, -0.1}, {-0.3, -0.1}, 5, 6));
  CHECK(still.w2_endpoints == doctest::Approx(0.0));
  CHECK(still.max_deviation < 1e-12);
  CHECK_THROWS_AS(build_w2_from_monotone(plan, cls, {-0.8, -0.5}, {-0.3, -0.1}, 5, 6), PreconditionError);
}

TEST_CASE("W2 construction on parallel translation geodesics") {
  const spaces::DynamicalPlan plan(
      {spaces::Geodesic(p2(0, 0), p2(1, 0)), spaces::Geodesic(p2(0, 1), p2(1, 1)), spaces::Geodesic(p2(0, 3), p2(0.5, 3))},
      {0.4, 0.4, 0.2});
  disint::LevelClass cls;
  cls.a = 0.0;
  cls.members = {0, 1, 2};
  const auto c = build_w2_from_monotone(plan, cls, {-0.2, -0.05}, {-0.9, -0.6}, 5, 4);
  // The short geodesic cannot hold the second interval.
  CHECK(c.excluded == std::vector<std::size_t>{2});
  const auto rep = check_w2_geodesic(c);
  CHECK(rep.max_deviation < 1e-10);
  CHECK(rep.monotone.pass);
}

TEST_CASE("MCP sandwich") {
  const double alpha = 0.5;
  const double N = 3;
  std::vector<double> tau;
  std::vector<double> g;
  for (int k = 1; k < 10; ++k) {
    tau.push_back(k / 10.0);
    g.push_back(std::pow(1 - tau.back() * alpha, N - 1));
  }
  const auto rep = check_mcp_bound(tau, g, 1.0, 0.0, N);
  CHECK(rep.min_residual() >= -1e-12);
  // r = R gives zero on both sides.
  const auto same = check_mcp_bound({0.5}, {2.0}, 1.0, 1.0, N);
  for (const auto& s : same.samples) {
    CHECK(s.value == doctest::Approx(0.0));
  }
  CHECK_THROWS_AS(check_mcp_bound(tau, g, 1.0, 0.0, 1.0), PreconditionError);
}

TEST_CASE("MCP on the sine power interval") {
  const double N = 3;
  const auto space = spaces::ModelSpace::sine_power(N);
  const auto m = models::make_quantile_1d(space, 0.5, 1.1, 1.4, 2.2);
  const auto plan = plan_of(*m, 16);
  for (std::size_t i = 0; i < plan.size(); i += 5) {
    std::vector<double> tau;
    std::vector<double> g;
    for (int k = 1; k < 10; ++k) {
      tau.push_back(k / 10.0);
      g.push_back(line_density(*m, plan.geodesic(i).x0(), tau.back()));
    }
    CHECK(check_mcp_bound(tau, g, plan.geodesic(i).length(), N - 1, N, i).min_residual() >= -1e-6);
  }
}

TEST_CASE("residual report accessors") {
  ResidualReport rep;
  CHECK_THROWS_AS(rep.worst(), DomainError);
  rep.samples = {{0, 0.0, 0.5, 0.2}, {1, 0.1, 0.3, -0.4}};
  CHECK(rep.min_residual() == -0.4);
  CHECK(rep.max_abs_residual() == 0.4);
  CHECK(rep.worst().geodesic == 1);
}
