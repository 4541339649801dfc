#include "feller/chain.hpp"

#include <deque>

namespace feller {

Eigen::VectorXd chain_stationary(const Chain& chain) {
  const Eigen::Index n = chain.states();
  const Eigen::MatrixXd& P = chain.matrix();
  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(n, n);
  Eigen::FullPivLU<Eigen::MatrixXd> rank_lu(A);
  rank_lu.setThreshold(1e-10);
  if (rank_lu.rank() < n - 1) {
    throw DegenerateError("stationary distribution is not unique (kernel dimension " +
                          std::to_string(n - rank_lu.rank()) + ")");
  }
  A.row(n - 1).setOnes();
  const Eigen::VectorXd rhs = Eigen::VectorXd::Unit(n, n - 1);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd pi = lu.solve(rhs);
  pi += lu.solve(rhs - A * pi);
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  const double residual = (P.transpose() * pi - pi).lpNorm<1>();
  if (residual > 1e-12) {
    throw NumericError("stationary solve residual " + std::to_string(residual) + " exceeds 1e-12");
  }
  return pi;
}

namespace {

std::vector<std::vector<bool>> reachability(const Eigen::MatrixXd& P) {
  const Eigen::Index n = P.rows();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (Eigen::Index s = 0; s < n; ++s) {
    std::deque<Eigen::Index> queue{s};
    reach[s][s] = true;
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      for (Eigen::Index v = 0; v < n; ++v) {
        if (P(u, v) > 0.0 && !reach[s][v]) {
          reach[s][v] = true;
          queue.push_back(v);
        }
      }
    }
  }
  return reach;
}

}  // namespace

ChainStructure analyze_chain(const Chain& chain) {
  const Eigen::Index n = chain.states();
  const Eigen::MatrixXd& P = chain.matrix();
  ChainStructure out;
  out.reach = reachability(P);
  out.class_of.assign(n, -1);
  int classes = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (out.class_of[i] >= 0) continue;
    for (Eigen::Index j = i; j < n; ++j) {
      if (out.reach[i][j] && out.reach[j][i]) out.class_of[j] = classes;
    }
    ++classes;
  }
  out.class_closed.assign(classes, true);
  out.class_period.assign(classes, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (P(i, j) > 0.0 && out.class_of[i] != out.class_of[j]) out.class_closed[out.class_of[i]] = false;
    }
  }
  // Period of a closed class: gcd of level[u] + 1 - level[v] over its arcs.
  for (int c = 0; c < classes; ++c) {
    if (!out.class_closed[c]) continue;
    Eigen::Index root = 0;
    while (out.class_of[root] != c) ++root;
    std::vector<long> level(n, -1);
    std::deque<Eigen::Index> queue{root};
    level[root] = 0;
    long g = 0;
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      for (Eigen::Index v = 0; v < n; ++v) {
        if (P(u, v) <= 0.0) continue;
        if (level[v] < 0) {
          level[v] = level[u] + 1;
          queue.push_back(v);
        } else {
          g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
        }
      }
    }
    out.class_period[c] = static_cast<int>(std::max(1L, g));
    out.period = std::lcm(out.period, out.class_period[c]);
  }

  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n, n);
  for (int k = 0; k < out.period; ++k) Q = Q * P;
  for (int it = 0; it < 64; ++it) {
    Eigen::MatrixXd Q2 = Q * Q;
    for (Eigen::Index i = 0; i < n; ++i) Q2.row(i) /= Q2.row(i).sum();
    const double change = (Q2 - Q).cwiseAbs().maxCoeff();
    Q = std::move(Q2);
    if (change < 1e-15) break;
  }
  Eigen::MatrixXd Pr = Eigen::MatrixXd::Identity(n, n);
  for (int r = 0; r < out.period; ++r) {
    out.residue_limits.push_back(Pr * Q);
    Pr = Pr * P;
  }
  return out;
}

LimitMasses limit_ball_masses(const Chain& chain, const ChainStructure& structure,
                              const Eigen::VectorXd& dist, const std::vector<Eigen::Index>& ball) {
  require_distribution(chain, dist);
  const Eigen::Index n = chain.states();
  const Eigen::VectorXd mask = state_mask(n, ball);
  LimitMasses out{1.0, 0.0, 0.0, false};
  for (const auto& L : structure.residue_limits) {
    const double m = dist.dot(L * mask);
    out.liminf = std::min(out.liminf, m);
    out.limsup = std::max(out.limsup, m);
    out.cesaro += m;
  }
  out.cesaro /= static_cast<double>(structure.residue_limits.size());
  for (Eigen::Index i = 0; i < n && !out.cesaro_positive_structural; ++i) {
    if (dist(i) <= 0.0) continue;
    for (auto b : ball) {
      if (structure.reach[i][b] && structure.class_closed[structure.class_of[b]]) {
        out.cesaro_positive_structural = true;
        break;
      }
    }
  }
  return out;
}

}  // namespace feller
