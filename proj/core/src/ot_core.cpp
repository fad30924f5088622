#include "geodecomp/ot_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace geodecomp::ot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Residual supply/demand below this is treated as exhausted.
constexpr double kMassEps = 1e-15;

double binomial(std::size_t n, std::size_t k) {
  if (k > n) {
    return 0.0;
  }
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    r *= static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return r;
}

double factorial(std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 2; i <= k; ++i) {
    r *= static_cast<double>(i);
  }
  return r;
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(std::vector<Point> points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.empty()) {
    throw DomainError("DiscreteMeasure: empty support");
  }
  if (points_.size() != weights_.size()) {
    throw DomainError("DiscreteMeasure: points and weights differ in length");
  }
  const auto d = points_.front().size();
  double total = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].size() != d) {
      throw DomainError("DiscreteMeasure: mixed point dimensions");
    }
    if (!points_[i].allFinite()) {
      throw DomainError("DiscreteMeasure: non-finite point");
    }
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i])) {
      throw DomainError("DiscreteMeasure: weight " + std::to_string(i) + " is negative or not finite");
    }
    total += weights_[i];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw DomainError("DiscreteMeasure: weights sum to " + std::to_string(total) + ", expected 1");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (std::size_t j = i + 1; j < points_.size(); ++j) {
      if (points_[i] == points_[j]) {
        throw DomainError("DiscreteMeasure: repeated point at indices " + std::to_string(i) + ", " +
                          std::to_string(j));
      }
    }
  }
}

DiscreteMeasure DiscreteMeasure::uniform(std::vector<Point> points) {
  const std::size_t n = points.size();
  if (n == 0) {
    throw DomainError("DiscreteMeasure: empty support");
  }
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  return DiscreteMeasure(std::move(points), std::move(w));
}

CostFunction half_squared_distance() {
  return [](const Point& x, const Point& y) { return 0.5 * (x - y).squaredNorm(); };
}

CostFunction distance() {
  return [](const Point& x, const Point& y) { return (x - y).norm(); };
}

Coupling solve_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostFunction& cost) {
  const std::size_t n = mu.size();
  const std::size_t m = nu.size();
  if (mu.dim() != nu.dim()) {
    throw DomainError("solve_ot: marginals live in different dimensions");
  }

  Matrix C(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = cost(mu.point(i), nu.point(j));
      if (!std::isfinite(c)) {
        throw DomainError("solve_ot: non-finite cost entry");
      }
      C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
    }
  }

  // Nodes 0..n-1 are sources, n..n+m-1 targets. Forward arcs i -> j have
  // unbounded capacity; the reverse arc j -> i exists while flow(i, j) > 0.
  Matrix flow = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::vector<double> supply(mu.weights());
  std::vector<double> demand(nu.weights());
  std::vector<double> pot(n + m, 0.0);
  std::vector<double> dist(n + m);
  std::vector<std::size_t> pred(n + m);
  std::vector<char> done(n + m);
  const std::size_t none = n + m;

  auto remaining = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
      s += std::max(x, 0.0);
    }
    return s;
  };

  const std::size_t max_iter = 64 * (n + m) * (n + m) + 64;
  std::size_t iter = 0;
  while (remaining(supply) > kMassEps && remaining(demand) > kMassEps) {
    if (++iter > max_iter) {
      throw DomainError("solve_ot: augmentation did not terminate");
    }
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(pred.begin(), pred.end(), none);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (supply[i] > kMassEps) {
        dist[i] = 0.0;
      }
    }
    // Dense Dijkstra on reduced costs.
    std::size_t sink = none;
    for (;;) {
      std::size_t u = none;
      double best = kInf;
      for (std::size_t v = 0; v < n + m; ++v) {
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      }
      if (u == none) {
        break;
      }
      done[u] = 1;
      if (u >= n && demand[u - n] > kMassEps) {
        sink = u;
        break;
      }
      if (u < n) {
        const auto ui = static_cast<Eigen::Index>(u);
        for (std::size_t j = 0; j < m; ++j) {
          const std::size_t v = n + j;
          if (done[v]) {
            continue;
          }
          const double rc = std::max(C(ui, static_cast<Eigen::Index>(j)) + pot[u] - pot[v], 0.0);
          if (dist[u] + rc < dist[v]) {
            dist[v] = dist[u] + rc;
            pred[v] = u;
          }
        }
      } else {
        const auto uj = static_cast<Eigen::Index>(u - n);
        for (std::size_t i = 0; i < n; ++i) {
          if (done[i] || flow(static_cast<Eigen::Index>(i), uj) <= 0.0) {
            continue;
          }
          const double rc = std::max(-C(static_cast<Eigen::Index>(i), uj) + pot[u] - pot[i], 0.0);
          if (dist[u] + rc < dist[i]) {
            dist[i] = dist[u] + rc;
            pred[i] = u;
          }
        }
      }
    }
    if (sink == none) {
      throw DomainError("solve_ot: no augmenting path; marginal masses are inconsistent");
    }
    const double dsink = dist[sink];
    for (std::size_t v = 0; v < n + m; ++v) {
      pot[v] += std::min(dist[v], dsink);
    }

    // Bottleneck along the path.
    double delta = demand[sink - n];
    std::size_t v = sink;
    while (pred[v] != none) {
      const std::size_t u = pred[v];
      if (u >= n) {
        delta = std::min(delta, flow(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u - n)));
      }
      v = u;
    }
    delta = std::min(delta, supply[v]);

    supply[v] -= delta;
    demand[sink - n] -= delta;
    v = sink;
    while (pred[v] != none) {
      const std::size_t u = pred[v];
      if (u < n) {
        flow(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v - n)) += delta;
      } else {
        auto& f = flow(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u - n));
        f -= delta;
        if (f < kMassEps) {
          f = 0.0;
        }
      }
      v = u;
    }
  }

  Coupling out;
  std::vector<double> phi(n);
  std::vector<double> psi(m);
  for (std::size_t i = 0; i < n; ++i) {
    phi[i] = -pot[i];
  }
  for (std::size_t j = 0; j < m; ++j) {
    psi[j] = pot[n + j];
  }
  // Polish: replace the duals by a double c-transform. This keeps
  // feasibility, preserves equality on the support and removes slack
  // left by rounding in the potentials.
  for (std::size_t j = 0; j < m; ++j) {
    double best = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      best = std::min(best, C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - phi[i]);
    }
    psi[j] = best;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double best = kInf;
    for (std::size_t j = 0; j < m; ++j) {
      best = std::min(best, C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - psi[j]);
    }
    phi[i] = best;
  }
  const double gauge = phi[0];
  for (double& p : phi) {
    p -= gauge;
  }
  for (double& p : psi) {
    p += gauge;
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double f = flow(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (f > 0.0) {
        out.entries.push_back({i, j, f});
        out.cost_total += f * C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
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

std::vector<double> c_transform(const std::vector<double>& phi, const std::vector<Point>& source_points,
                                const std::vector<Point>& target_points, const CostFunction& cost) {
  if (phi.size() != source_points.size()) {
    throw DomainError("c_transform: potential and source sizes differ");
  }
  if (source_points.empty()) {
    throw DomainError("c_transform: empty source");
  }
  std::vector<double> out(target_points.size());
  for (std::size_t j = 0; j < target_points.size(); ++j) {
    double best = kInf;
    for (std::size_t i = 0; i < source_points.size(); ++i) {
      best = std::min(best, cost(source_points[i], target_points[j]) - phi[i]);
    }
    out[j] = best;
  }
  return out;
}

double max_entry_cost(const Coupling& c, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                      const CostFunction& cost) {
  double best = 0.0;
  for (const auto& e : c.entries) {
    best = std::max(best, std::abs(cost(mu.point(e.source), nu.point(e.target))));
  }
  return best;
}

std::vector<PointPair> support_pairs(const Coupling& c, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<PointPair> out;
  out.reserve(c.entries.size());
  for (const auto& e : c.entries) {
    if (e.mass > 0.0) {
      out.emplace_back(mu.point(e.source), nu.point(e.target));
    }
  }
  return out;
}

CycleVerdict check_cyclical_monotonicity(const std::vector<PointPair>& pairs, const CostFunction& cost,
                                         const CycleOptions& options) {
  if (options.max_cycle < 2) {
    throw DomainError("check_cyclical_monotonicity: max_cycle must be >= 2");
  }
  const std::size_t n = pairs.size();
  const std::size_t kmax = std::min(options.max_cycle, n);
  double work = 0.0;
  for (std::size_t k = 2; k <= kmax; ++k) {
    work += binomial(n, k) * factorial(k);
  }
  if (work > options.work_cap) {
    throw BudgetError("check_cyclical_monotonicity: " + std::to_string(work) +
                      " cycle evaluations exceed the cap " + std::to_string(options.work_cap));
  }

  Matrix C(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cost(pairs[i].first, pairs[j].second);
    }
  }

  CycleVerdict verdict;
  std::vector<std::size_t> cyc;
  std::vector<char> used(n, 0);

  // Depth-first over tuples (i_1 < everything else, i_2, ..., i_k).
  auto evaluate = [&]() -> bool {
    const std::size_t k = cyc.size();
    double current = 0.0;
    double shifted = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      const auto a = static_cast<Eigen::Index>(cyc[r]);
      const auto b = static_cast<Eigen::Index>(cyc[(r + 1) % k]);
      current += C(a, a);
      shifted += C(a, b);
    }
    ++verdict.cycles_checked;
    const double margin = current - shifted;
    if (margin > options.abs_tol + options.rel_tol * std::abs(current)) {
      verdict.pass = false;
      verdict.cycle = cyc;
      verdict.margin = margin;
      return true;
    }
    return false;
  };

  std::function<bool(std::size_t)> extend = [&](std::size_t k) -> bool {
    if (cyc.size() == k) {
      return evaluate();
    }
    for (std::size_t j = cyc.front() + 1; j < n; ++j) {
      if (used[j]) {
        continue;
      }
      used[j] = 1;
      cyc.push_back(j);
      const bool found = extend(k);
      cyc.pop_back();
      used[j] = 0;
      if (found) {
        return true;
      }
    }
    return false;
  };

  for (std::size_t k = 2; k <= kmax; ++k) {
    for (std::size_t first = 0; first < n; ++first) {
      cyc.assign(1, first);
      used[first] = 1;
      const bool found = extend(k);
      used[first] = 0;
      if (found) {
        return verdict;
      }
    }
  }
  return verdict;
}

CycleVerdict check_d_monotone(const std::vector<PointPair>& pairs, const CycleOptions& options) {
  return check_cyclical_monotonicity(pairs, distance(), options);
}

std::vector<double> rockafellar_potential(const std::vector<PointPair>& pairs, const CostFunction& cost) {
  const std::size_t n = pairs.size();
  if (n == 0) {
    throw DomainError("rockafellar_potential: empty pair set");
  }
  Matrix W(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double cii = cost(pairs[i].first, pairs[i].second);
    for (std::size_t k = 0; k < n; ++k) {
      W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = cost(pairs[k].first, pairs[i].second) - cii;
    }
  }
  std::vector<double> phi(n, kInf);
  phi[0] = 0.0;
  // Bellman-Ford on the complete graph; tolerate rounding-level improvements.
  for (std::size_t round = 0; round <= n; ++round) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(phi[i])) {
        continue;
      }
      for (std::size_t k = 0; k < n; ++k) {
        const double cand = phi[i] + W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        if (!std::isfinite(phi[k]) || cand < phi[k] - 1e-12 * (1.0 + std::abs(phi[k]))) {
          phi[k] = cand;
          changed = true;
        }
      }
    }
    if (!changed) {
      return phi;
    }
  }
  throw PreconditionError("rockafellar_potential: negative cycle, pairs are not c-cyclically monotone");
}

}  // namespace geodecomp::ot
