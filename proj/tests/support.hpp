#pragma once

#include <random>
#include <vector>

#include "feller/chain.hpp"
#include "feller/measure.hpp"
#include "feller/system.hpp"

namespace feller::test {

inline Point pt(double x) { return Point::Constant(1, x); }
inline Point pt(double x, double y) { return Point{{x, y}}; }

inline FiniteMeasure atoms1d(const std::vector<std::pair<double, double>>& a) {
  std::vector<std::pair<Point, double>> list;
  for (auto [x, w] : a) list.emplace_back(pt(x), w);
  return FiniteMeasure::from_list(list);
}

inline DiscreteIFS halving_ifs() {
  return DiscreteIFS({AffineMap::scalar(0.5, 0.0), AffineMap::scalar(0.5, 0.5)},
                     ProbabilityField::constant(Eigen::Vector2d(0.5, 0.5)));
}

inline Chain two_state() {
  Eigen::MatrixXd P(2, 2);
  P << 0.9, 0.1, 0.2, 0.8;
  return Chain(P);
}

// Dense random chain; with `floor` > 0 every entry is at least floor/n, so
// the chain is irreducible and aperiodic.
inline Chain random_chain(std::mt19937_64& rng, int n, double floor = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd P(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) P(i, j) = u(rng) + floor / n;
    P.row(i) /= P.row(i).sum();
  }
  return Chain(P);
}

inline Eigen::VectorXd random_dist(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v / v.sum();
}

inline FiniteMeasure random_measure(std::mt19937_64& rng, int dim, int atoms, double spread = 3.0) {
  std::uniform_real_distribution<double> u(-spread, spread), w(0.05, 1.0);
  Eigen::MatrixXd pts(dim, atoms);
  Eigen::VectorXd ws(atoms);
  for (int j = 0; j < atoms; ++j) {
    for (int k = 0; k < dim; ++k) pts(k, j) = u(rng);
    ws(j) = w(rng);
  }
  ws /= ws.sum();
  return FiniteMeasure::from_atoms(pts, ws);
}

}  // namespace feller::test
