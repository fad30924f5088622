#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "geodecomp/disintegration.hpp"
#include "geodecomp/distortion.hpp"
#include "geodecomp/ot_core.hpp"
#include "geodecomp/potential_flow.hpp"
#include "geodecomp/transport_models.hpp"

using namespace geodecomp;

namespace {

std::vector<Point> random_points(std::size_t n, int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Point> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(Point::NullaryExpr(d, [&](Eigen::Index) { return u(rng); }));
  }
  return out;
}

void BM_SolveOT(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto mu = ot::DiscreteMeasure::uniform(random_points(n, 2, rng));
  const auto nu = ot::DiscreteMeasure::uniform(random_points(n, 2, rng));
  const auto cost = ot::half_squared_distance();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ot::solve_ot(mu, nu, cost));
  }
}
BENCHMARK(BM_SolveOT)->Arg(16)->Arg(64)->Arg(128);

void BM_Tau(benchmark::State& state) {
  const distortion::DistortionParams p(-1.0, 3.0);
  double t = 0.0;
  for (auto _ : state) {
    t = t > 0.99 ? 0.01 : t + 0.01;
    benchmark::DoNotOptimize(distortion::tau(p, t, 1.3));
  }
}
BENCHMARK(BM_Tau);

void BM_EvolveKantorovich(benchmark::State& state) {
  const auto per_axis = static_cast<std::size_t>(state.range(0));
  const auto m = models::make_dilation(2, 0.5, 0.5, 1.5);
  const auto src = m->source_grid(per_axis);
  std::vector<spaces::Geodesic> gs;
  flow::PotentialField phic;
  for (const auto& x : src.points) {
    gs.emplace_back(x, m->map(x));
    phic.points.push_back(gs.back().x1());
    phic.values.push_back(m->phi_c(gs.back().x1()));
  }
  const spaces::DynamicalPlan plan(gs, src.weights);
  for (auto _ : state) {
    benchmark::DoNotOptimize(flow::evolve_kantorovich(phic, 0.5, plan));
  }
}
BENCHMARK(BM_EvolveKantorovich)->Arg(8)->Arg(16);

void BM_StripConditionals(benchmark::State& state) {
  const auto m = models::make_dilation(2, 0.5, 0.5, 1.5);
  disint::StripOptions opt;
  opt.eps = 3e-3;
  opt.budget = static_cast<std::size_t>(state.range(0));
  opt.seed = 1;
  Point x(2);
  x << 1.0, 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(disint::strip_conditionals(*m, m->phi(x), 0.3, opt));
  }
}
BENCHMARK(BM_StripConditionals)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
