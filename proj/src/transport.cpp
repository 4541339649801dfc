#include "feller/transport.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "feller/errors.hpp"

namespace feller {

namespace {

// Min-cost flow on an uncapacitated network, solved by successive shortest
// paths with Dijkstra on reduced costs. Node potentials returned by solve()
// are dual-feasible and complementary to the flow, so y = -p is an optimal
// solution of the dual LP  max sum_v b_v y_v  s.t.  y_u - y_v <= c_uv.
class UncapacitatedFlow {
 public:
  explicit UncapacitatedFlow(int nodes) : head_(nodes, -1), potential_(nodes, 0.0) {}

  void add_arc(int from, int to, double cost) {
    arcs_.push_back({to, head_[from], cost, 0.0});
    head_[from] = static_cast<int>(arcs_.size()) - 1;
    arcs_.push_back({from, head_[to], -cost, 0.0});
    head_[to] = static_cast<int>(arcs_.size()) - 1;
  }

  // Returns the number of augmentations.
  std::size_t solve(std::vector<double> excess, std::size_t max_augmentations) {
    const int n = static_cast<int>(head_.size());
    constexpr double kTol = 1e-15;
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n);
    std::vector<int> parent(n);
    std::size_t augmentations = 0;
    using Item = std::pair<double, int>;

    for (;;) {
      int s = -1;
      for (int v = 0; v < n; ++v) {
        if (excess[v] > kTol && (s < 0 || excess[v] > excess[s])) s = v;
      }
      if (s < 0) break;
      if (augmentations >= max_augmentations) {
        throw NumericError("transport LP did not converge after " +
                           std::to_string(augmentations) + " augmentations (residual excess " +
                           std::to_string(excess[s]) + ")");
      }

      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(parent.begin(), parent.end(), -1);
      std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
      dist[s] = 0.0;
      heap.push({0.0, s});
      while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) continue;
        for (int a = head_[u]; a >= 0; a = arcs_[a].next) {
          if (!has_residual(a)) continue;
          const int v = arcs_[a].to;
          const double rc = std::max(0.0, arcs_[a].cost + potential_[u] - potential_[v]);
          if (d + rc < dist[v]) {
            dist[v] = d + rc;
            parent[v] = a;
            heap.push({dist[v], v});
          }
        }
      }

      int t = -1;
      for (int v = 0; v < n; ++v) {
        if (excess[v] < -kTol && dist[v] < kInf && (t < 0 || dist[v] < dist[t])) t = v;
      }
      if (t < 0) break;  // remaining excess is rounding noise
      for (int v = 0; v < n; ++v) {
        if (dist[v] < kInf) potential_[v] += dist[v];
      }

      double delta = std::min(excess[s], -excess[t]);
      for (int v = t; v != s; v = arcs_[parent[v] ^ 1].to) {
        const int a = parent[v];
        if (a & 1) delta = std::min(delta, arcs_[a ^ 1].flow);
      }
      for (int v = t; v != s; v = arcs_[parent[v] ^ 1].to) {
        const int a = parent[v];
        if (a & 1) {
          arcs_[a ^ 1].flow = std::max(0.0, arcs_[a ^ 1].flow - delta);
        } else {
          arcs_[a].flow += delta;
        }
      }
      excess[s] -= delta;
      excess[t] += delta;
      ++augmentations;
    }
    return augmentations;
  }

  double potential(int v) const { return potential_[v]; }

  double primal_cost() const {
    double c = 0.0;
    for (std::size_t a = 0; a < arcs_.size(); a += 2) c += arcs_[a].flow * arcs_[a].cost;
    return c;
  }

 private:
  struct Arc {
    int to;
    int next;
    double cost;
    double flow;  // only meaningful on forward (even) arcs
  };

  bool has_residual(int a) const { return (a & 1) == 0 || arcs_[a ^ 1].flow > 0.0; }

  std::vector<int> head_;
  std::vector<Arc> arcs_;
  std::vector<double> potential_;
};

bool is_path_metric_1d(const FiniteMeasure& m, const MetricSpec& metric) {
  return m.dim() == 1 && (metric.kind != MetricKind::truncated || metric.cap >= 2.0);
}

}  // namespace

TransportResult fm_distance(const FiniteMeasure& m1, const FiniteMeasure& m2,
                            const MetricSpec& metric, Eigen::Index support_cap) {
  metric.validate();
  if (m1.dim() != m2.dim()) throw InputError("fm_distance: dimension mismatch");
  const AlignedPair u = align(m1, m2);
  const Eigen::Index n = u.points.cols();
  if (n > support_cap) {
    throw ResourceError("fm_distance: union support " + std::to_string(n) +
                        " exceeds cap " + std::to_string(support_cap) + "; prune first");
  }
  const int ground = static_cast<int>(n);
  UncapacitatedFlow flow(static_cast<int>(n) + 1);
  for (int i = 0; i < ground; ++i) {
    flow.add_arc(i, ground, 1.0);
    flow.add_arc(ground, i, 1.0);
  }
  // Pairs at distance >= 2 are implied by the box constraints. On the line the
  // consecutive-pair constraints imply all others by the triangle inequality.
  struct Pair { int i, j; double rho; };
  std::vector<Pair> pairs;
  if (is_path_metric_1d(m1, metric)) {
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double gap = u.points(0, i + 1) - u.points(0, i);
      if (gap < 2.0) pairs.push_back({static_cast<int>(i), static_cast<int>(i + 1), gap});
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double rho = distance_unchecked(metric, u.points.col(i), u.points.col(j));
        if (rho < 2.0) pairs.push_back({static_cast<int>(i), static_cast<int>(j), rho});
      }
    }
  }
  for (const auto& p : pairs) {
    flow.add_arc(p.i, p.j, p.rho);
    flow.add_arc(p.j, p.i, p.rho);
  }

  std::vector<double> excess(static_cast<std::size_t>(n) + 1, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) excess[i] = u.w1(i) - u.w2(i);

  TransportResult r;
  r.augmentations = flow.solve(excess, 64 * static_cast<std::size_t>(n) + 1024);
  r.support = u.points;
  r.potentials.resize(n);
  for (int i = 0; i < ground; ++i) r.potentials(i) = flow.potential(ground) - flow.potential(i);
  r.value = std::max(0.0, (u.w1 - u.w2).dot(r.potentials));
  r.primal_cost = flow.primal_cost();
  r.duality_gap = std::abs(r.primal_cost - r.value);
  r.box_residual = n == 0 ? 0.0 : std::max(0.0, r.potentials.cwiseAbs().maxCoeff() - 1.0);
  for (const auto& p : pairs) {
    const double v = std::abs(r.potentials(p.i) - r.potentials(p.j)) - p.rho;
    r.lipschitz_residual = std::max(r.lipschitz_residual, v);
  }
  return r;
}

double potential_violation(const TransportResult& result, const MetricSpec& metric) {
  const Eigen::Index n = result.potentials.size();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    worst = std::max(worst, std::abs(result.potentials(i)) - 1.0);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double rho = distance_unchecked(metric, result.support.col(i), result.support.col(j));
      worst = std::max(worst, std::abs(result.potentials(i) - result.potentials(j)) - rho);
    }
  }
  return worst;
}

double w1_distance_1d(const FiniteMeasure& m1, const FiniteMeasure& m2) {
  if (m1.dim() != 1 || m2.dim() != 1) throw InputError("w1_distance_1d requires dimension 1");
  const AlignedPair u = align(m1, m2);
  double cdf_gap = 0.0, total = 0.0;
  for (Eigen::Index k = 0; k + 1 < u.points.cols(); ++k) {
    cdf_gap += u.w1(k) - u.w2(k);
    total += std::abs(cdf_gap) * (u.points(0, k + 1) - u.points(0, k));
  }
  return total;
}

}  // namespace feller
