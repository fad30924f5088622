#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "geodecomp/ot_core.hpp"
#include "geodecomp/spaces.hpp"
#include "geodecomp/transport_models.hpp"

using namespace geodecomp;
using namespace geodecomp::spaces;

namespace {

Point p1(double x) { return Point::Constant(1, x); }

Point p2(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

}  // namespace

TEST_CASE("geodesic evaluation") {
  const Geodesic g(p2(0, 0), p2(2, 0));
  CHECK(eval(g, 0.5).isApprox(p2(1, 0)));
  CHECK(eval(g, 0.0) == g.x0());
  CHECK(eval(g, 1.0) == g.x1());
  CHECK(eval(Geodesic(p1(0.2), p1(0.8)), 0.25)[0] == doctest::Approx(0.35));
  CHECK_THROWS_AS(eval(g, 1.5), DomainError);
  CHECK_THROWS_AS(eval(g, -0.1), DomainError);
}

TEST_CASE("geodesics have constant speed") {
  const Geodesic g(p2(-1, 0.5), p2(2, 3));
  for (double s : {0.0, 0.2, 0.7}) {
    for (double t : {0.1, 0.5, 1.0}) {
      CHECK((eval(g, s) - eval(g, t)).norm() == doctest::Approx(std::abs(s - t) * g.length()));
    }
  }
}

TEST_CASE("model space weights") {
  const auto sine = ModelSpace::sine_power(3);
  CHECK(sine.lo() == 0.0);
  CHECK(sine.hi() == doctest::Approx(std::numbers::pi));
  CHECK(sine.weight(1.0) == doctest::Approx(std::sin(1.0) * std::sin(1.0)));
  const auto cone = ModelSpace::cone(4);
  CHECK(cone.weight(0.5) == doctest::Approx(0.125));
  CHECK(cone.contains(p1(0.5)));
  CHECK_FALSE(cone.contains(p1(1.5)));
  const auto gauss = ModelSpace::euclidean(2, [](const Point& x) { return -0.5 * x.squaredNorm(); });
  CHECK(gauss.weight(p2(1, 1)) == doctest::Approx(std::exp(-1.0)));
  CHECK(ModelSpace::euclidean(3).weight(Point::Zero(3)) == 1.0);
}

TEST_CASE("plan from coupling") {
  const auto mu = ot::DiscreteMeasure::uniform({p1(0), p1(1)});
  const auto nu = ot::DiscreteMeasure::uniform({p1(2), p1(3)});
  const auto c = ot::solve_ot(mu, nu, ot::half_squared_distance());
  const auto plan = plan_from_coupling(c, mu, nu, ModelSpace::euclidean(1));
  CHECK(plan.size() == 2);
  CHECK(plan.weight(0) == doctest::Approx(0.5));
  CHECK(plan.weight(1) == doctest::Approx(0.5));
  // (e_0, e_1) pushforward equals the coupling.
  for (const auto& g : plan.geodesics()) {
    CHECK(g.x1()[0] - g.x0()[0] == doctest::Approx(2.0));
  }
}

TEST_CASE("identity coupling violates length bounds") {
  const auto mu = ot::DiscreteMeasure::uniform({p1(0), p1(1)});
  const auto c = ot::solve_ot(mu, mu, ot::half_squared_distance());
  CHECK_THROWS_AS(plan_from_coupling(c, mu, mu, ModelSpace::euclidean(1), LengthBounds{10.0}), DomainError);
}

TEST_CASE("dilation coupling gives lengths alpha |x0|") {
  const double alpha = 0.4;
  std::vector<Point> xs;
  std::vector<Point> ys;
  for (int k = 1; k <= 6; ++k) {
    xs.push_back(p2(0.3 * k, -0.1 * k));
    ys.push_back((1 - alpha) * xs.back());
  }
  const auto mu = ot::DiscreteMeasure::uniform(xs);
  const auto nu = ot::DiscreteMeasure::uniform(ys);
  const auto plan = plan_from_coupling(ot::solve_ot(mu, nu, ot::half_squared_distance()), mu, nu,
                                       ModelSpace::euclidean(2));
  CHECK(plan.size() == 6);
  for (const auto& g : plan.geodesics()) {
    CHECK(g.length() == doctest::Approx(alpha * g.x0().norm()).epsilon(1e-12));
  }
}

TEST_CASE("dynamical plan rejects duplicate endpoint pairs") {
  const Geodesic g(p1(0), p1(1));
  CHECK_THROWS_AS(DynamicalPlan({g, g}, {0.5, 0.5}), DomainError);
}

TEST_CASE("density cdf and quantile") {
  const Density1D d(0, std::numbers::pi, [](double x) { return std::sin(x) * std::sin(x); });
  // CDF of sin^2 on (0, pi): (x - sin(x) cos(x)) / pi.
  for (double x : {0.3, 1.0, 2.0, 2.9}) {
    CHECK(d.cdf(x) == doctest::Approx((x - std::sin(x) * std::cos(x)) / std::numbers::pi).epsilon(1e-12));
    CHECK(d.quantile(d.cdf(x)) == doctest::Approx(x).epsilon(1e-10));
  }
  CHECK(d.mass() == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
}

TEST_CASE("quantile coupling examples") {
  const Density1D u01(0, 1, [](double) { return 1.0; });
  const Density1D u23(2, 3, [](double) { return 1.0; });
  const auto same = quantile_coupling(u01, u01, 16);
  for (std::size_t k = 0; k < 16; ++k) {
    CHECK(same.source.point(k)[0] == doctest::Approx(same.target.point(k)[0]).epsilon(1e-12));
  }
  const auto shift = quantile_coupling(u01, u23, 16);
  for (std::size_t k = 0; k < 16; ++k) {
    CHECK(shift.target.point(k)[0] - shift.source.point(k)[0] == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("quantile coupling agrees with the exact solver") {
  const Density1D a(0, std::numbers::pi, [](double x) { return std::sin(x) * std::sin(x); });
  const Density1D b(0.5, 0.5 + std::numbers::pi, [](double x) { return std::pow(std::sin(x - 0.5), 2); });
  const auto q = quantile_coupling(a, b, 24);
  const auto c = ot::solve_ot(q.source, q.target, ot::half_squared_distance());
  CHECK(c.cost_total == doctest::Approx(q.coupling.cost_total).epsilon(1e-8));
  CHECK(ot::check_cyclical_monotonicity(ot::support_pairs(q.coupling, q.source, q.target),
                                        ot::half_squared_distance())
            .pass);
}

TEST_CASE("monotone coupling carries valid duals") {
  const auto mu = ot::DiscreteMeasure({p1(0.5), p1(-1), p1(2)}, {0.2, 0.5, 0.3});
  const auto nu = ot::DiscreteMeasure({p1(1), p1(4)}, {0.6, 0.4});
  const auto c = monotone_coupling(mu, nu);
  const auto cost = ot::half_squared_distance();
  for (const auto& e : c.entries) {
    if (e.mass > 0) {
      CHECK(c.dual_source[e.source] + c.dual_target[e.target] ==
            doctest::Approx(cost(mu.point(e.source), nu.point(e.target))));
    }
  }
  CHECK(std::abs(c.duality_gap()) < 1e-12);
}

TEST_CASE("interpolant density examples") {
  const auto eucl1 = ModelSpace::euclidean(1);
  const ScalarField uniform = [](const Point& x) { return (x[0] >= 0 && x[0] <= 1) ? 1.0 : 0.0; };
  const TransportMap shift{[](const Point& x) { return Point(x.array() + 2.0); },
                           [](const Point&) { return Matrix::Identity(1, 1); }};
  for (double t : {0.0, 0.3, 0.9}) {
    CHECK(interpolant_density(eucl1, uniform, shift, t, p1(0.4)) == doctest::Approx(1.0));
  }
  const double alpha = 0.3;
  const int N = 3;
  const auto eucl3 = ModelSpace::euclidean(N);
  const ScalarField rho0 = [](const Point&) { return 2.0; };
  const TransportMap dil{[=](const Point& x) { return Point((1 - alpha) * x); },
                         [=](const Point&) { return Matrix((1 - alpha) * Matrix::Identity(N, N)); }};
  const Point x = Point::Constant(N, 0.7);
  for (double t : {0.0, 0.5, 1.0}) {
    CHECK(interpolant_density(eucl3, rho0, dil, t, x) == doctest::Approx(2.0 / std::pow(1 - t * alpha, N)));
  }
  const TransportMap collapse{[](const Point&) { return Point::Zero(1); },
                              [](const Point&) { return Matrix::Zero(1, 1); }};
  CHECK(std::isinf(interpolant_density(eucl1, uniform, collapse, 1.0, p1(0.5))));
}

TEST_CASE("interpolant density integrates to one") {
  const auto space = ModelSpace::sine_power(3);
  const auto model = models::make_quantile_1d(space, 0.5, 1.1, 1.4, 2.2);
  const auto T = model->transport_map();
  const ScalarField rho0 = [&](const Point& x) { return model->rho0(x); };
  for (double t : {0.25, 0.5, 0.75}) {
    // Change of variables: integrate rho_t(x_t) w(x_t) |d x_t / d x| over the source.
    auto f = [&](double x) {
      const Point p = p1(x);
      const double jac = (1 - t) + t * T.jacobian(p)(0, 0);
      const Point z = model->eval(p, t);
      return interpolant_density(space, rho0, T, t, p) * space.weight(z) * jac;
    };
    const double total = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.5, 1.1, 10, 1e-12);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("plan interpolants are W2 geodesics") {
  const auto model = models::make_dilation(2, 0.5, 0.5, 1.5);
  const auto src = model->source_grid(6);
  std::vector<Geodesic> gs;
  for (const auto& x : src.points) {
    gs.emplace_back(x, model->map(x));
  }
  const DynamicalPlan plan(gs, src.weights);
  auto w2 = [&](double s, double t) {
    const auto c = ot::solve_ot(plan.evaluate_measure(s), plan.evaluate_measure(t), ot::half_squared_distance());
    return std::sqrt(2 * c.cost_total);
  };
  const double full = w2(0, 1);
  for (double s : {0.0, 0.25}) {
    for (double t : {0.5, 1.0}) {
      CHECK(std::abs(w2(s, t) - std::abs(t - s) * full) < 1e-6);
    }
  }
}
