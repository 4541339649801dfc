#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "feller/geometry.hpp"
#include "feller/measure.hpp"

namespace feller {

inline constexpr Eigen::Index kDefaultSupportCap = 5000;

// Optimum of the Fortet-Mourier (bounded-Lipschitz) LP
//
//   maximize   sum_i f_i (m1_i - m2_i)
//   subject to |f_i| <= 1,  |f_i - f_j| <= rho(x_i, x_j)
//
// over the union support of (m1, m2), together with the potentials attaining
// it and the residuals that certify them.
struct TransportResult {
  double value = 0.0;
  Eigen::MatrixXd support;     // union support, one column per potential
  Eigen::VectorXd potentials;  // f_i
  // Certificate. Constraint residuals are max(0, violation).
  double box_residual = 0.0;       // max_i (|f_i| - 1)
  double lipschitz_residual = 0.0; // max over the solver's arc set of |f_i - f_j| - rho_ij
  double primal_cost = 0.0;        // cost of the transport/creation plan found
  double duality_gap = 0.0;        // |primal_cost - value|
  std::size_t augmentations = 0;
};

// Exact Fortet-Mourier distance. Throws ResourceError when the union support
// exceeds `support_cap`, NumericError if the flow solver does not converge.
TransportResult fm_distance(const FiniteMeasure& m1, const FiniteMeasure& m2,
                            const MetricSpec& metric,
                            Eigen::Index support_cap = kDefaultSupportCap);

// Worst violation of the LP constraints by `result.potentials`, checked over
// every pair of the union support (O(n^2)); independent of the solver's arc set.
double potential_violation(const TransportResult& result, const MetricSpec& metric);

// Wasserstein-1 distance on the line: integral of |F1 - F2|.
double w1_distance_1d(const FiniteMeasure& m1, const FiniteMeasure& m2);

}  // namespace feller
