#pragma once

// Exact discrete optimal transport: successive-shortest-path min-cost flow
// with Kantorovich duals, c-transforms, and exhaustive cyclical-monotonicity
// certification of finite pair sets.

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "geodecomp/types.hpp"

namespace geodecomp::ot {

/// Finitely supported probability measure: distinct points with weights >= 0
/// summing to 1 within 1e-12.
class DiscreteMeasure {
 public:
  DiscreteMeasure(std::vector<Point> points, std::vector<double> weights);

  /// Equal weights 1/n on the given points.
  static DiscreteMeasure uniform(std::vector<Point> points);

  std::size_t size() const noexcept { return points_.size(); }
  Eigen::Index dim() const noexcept { return points_.front().size(); }
  const std::vector<Point>& points() const noexcept { return points_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const Point& point(std::size_t i) const { return points_.at(i); }
  double weight(std::size_t i) const { return weights_.at(i); }

 private:
  std::vector<Point> points_;
  std::vector<double> weights_;
};

using CostFunction = std::function<double(const Point&, const Point&)>;

/// c(x, y) = |x - y|^2 / 2.
CostFunction half_squared_distance();
/// c(x, y) = |x - y|.
CostFunction distance();

struct CouplingEntry {
  std::size_t source;
  std::size_t target;
  double mass;
};

/// Transport plan between two discrete measures together with a dual pair
/// (phi on the source points, phi^c on the target points).
struct Coupling {
  std::vector<CouplingEntry> entries;
  std::vector<double> dual_source;
  std::vector<double> dual_target;
  double cost_total = 0.0;
  double dual_total = 0.0;

  double duality_gap() const noexcept { return cost_total - dual_total; }
};

/// Primal-optimal coupling and optimal duals, gauge fixed by dual_source[0] = 0.
/// Throws DomainError if the marginals do not carry the same total mass or
/// the cost is not finite.
Coupling solve_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostFunction& cost);

/// phi^c(y_j) = min_i cost(x_i, y_j) - phi(x_i).
std::vector<double> c_transform(const std::vector<double>& phi,
                                const std::vector<Point>& source_points,
                                const std::vector<Point>& target_points,
                                const CostFunction& cost);

/// Max of cost(x_i, y_j) over the entries; useful to scale tolerances.
double max_entry_cost(const Coupling& c, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                      const CostFunction& cost);

using PointPair = std::pair<Point, Point>;

/// Support of a coupling as (x_i, y_j) pairs, zero-mass entries dropped.
std::vector<PointPair> support_pairs(const Coupling& c, const DiscreteMeasure& mu,
                                     const DiscreteMeasure& nu);

struct CycleVerdict {
  bool pass = true;
  /// Indices (i_1, ..., i_k) of the first violating cycle; empty on pass.
  std::vector<std::size_t> cycle;
  /// sum c(x_i, y_i) - sum c(x_i, y_{i+1}) on the violating cycle.
  double margin = 0.0;
  std::size_t cycles_checked = 0;
};

struct CycleOptions {
  std::size_t max_cycle = 3;
  /// Upper bound on C(n, k) * k! summed over k; exceeding it throws BudgetError.
  double work_cap = 5e7;
  /// A cycle violates when its margin exceeds abs_tol + rel_tol * |current cost|.
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
};

/// Exhaustive test of every cycle of length 2..max_cycle. Cycles are
/// enumerated as ordered tuples of distinct indices led by their smallest
/// index, so each cyclic class is visited once.
CycleVerdict check_cyclical_monotonicity(const std::vector<PointPair>& pairs,
                                         const CostFunction& cost,
                                         const CycleOptions& options = {});

/// check_cyclical_monotonicity with cost = distance.
CycleVerdict check_d_monotone(const std::vector<PointPair>& pairs, const CycleOptions& options = {});

/// A potential phi on the x_i with phi(x_k) + c(x_i, y_i) - phi(x_i) <= c(x_k, y_i),
/// built as shortest-path distances from x_0 with edge weights
/// c(x_k, y_i) - c(x_i, y_i) on i -> k. Equality phi + phi^c = c then holds on
/// every pair. Throws PreconditionError on a negative cycle (pairs not
/// c-cyclically monotone).
std::vector<double> rockafellar_potential(const std::vector<PointPair>& pairs, const CostFunction& cost);

}  // namespace geodecomp::ot
