#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "feller/errors.hpp"
#include "feller/geometry.hpp"

namespace feller {

inline constexpr double kStochasticTolerance = 1e-12;

// Finite-state chain with a row-stochastic transition matrix. Distributions
// are column vectors; one dual step is P^T dist.
template <typename Scalar>
class ExactChain {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit ExactChain(Matrix transition, std::vector<Point> embedding = {})
      : P_(std::move(transition)), embedding_(std::move(embedding)) {
    if (P_.rows() == 0 || P_.rows() != P_.cols()) throw InputError("chain matrix must be square, n >= 1");
    for (Eigen::Index i = 0; i < P_.rows(); ++i) {
      if (!P_.row(i).allFinite() || (P_.row(i).array() < Scalar(0)).any()) {
        throw InputError("chain row " + std::to_string(i) + " has negative or non-finite entries");
      }
      if (std::abs(static_cast<double>(P_.row(i).sum()) - 1.0) > kStochasticTolerance) {
        throw InputError("chain row " + std::to_string(i) + " does not sum to 1");
      }
    }
    if (!embedding_.empty() && static_cast<Eigen::Index>(embedding_.size()) != P_.rows()) {
      throw InputError("chain embedding needs one point per state");
    }
  }

  Eigen::Index states() const { return P_.rows(); }
  const Matrix& matrix() const { return P_; }
  const std::vector<Point>& embedding() const { return embedding_; }

  // States whose embedding point lies in the ball.
  std::vector<Eigen::Index> states_in_ball(const Ball& ball, const MetricSpec& metric) const {
    if (embedding_.empty()) throw InputError("chain has no state embedding");
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < states(); ++i) {
      if (in_ball(metric, ball, embedding_[i])) out.push_back(i);
    }
    return out;
  }

  Vector basis(Eigen::Index state) const {
    if (state < 0 || state >= states()) throw InputError("state index out of range");
    return Vector::Unit(states(), state);
  }

 private:
  Matrix P_;
  std::vector<Point> embedding_;
};

using Chain = ExactChain<double>;

template <typename Scalar>
void require_distribution(const ExactChain<Scalar>& chain,
                          const typename ExactChain<Scalar>::Vector& dist) {
  if (dist.size() != chain.states()) throw InputError("distribution length != state count");
  if (!dist.allFinite() || (dist.array() < Scalar(0)).any()) {
    throw InputError("distribution entries must be finite and nonnegative");
  }
  if (std::abs(static_cast<double>(dist.sum()) - 1.0) > kStochasticTolerance) {
    throw InputError("distribution does not sum to 1");
  }
}

template <typename Scalar>
typename ExactChain<Scalar>::Vector chain_dual_step(const ExactChain<Scalar>& chain,
                                                    const typename ExactChain<Scalar>::Vector& dist) {
  require_distribution(chain, dist);
  return chain.matrix().transpose() * dist;
}

// Mask of the listed states; throws on out-of-range indices.
inline Eigen::VectorXd state_mask(Eigen::Index n, const std::vector<Eigen::Index>& states) {
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(n);
  for (auto s : states) {
    if (s < 0 || s >= n) throw InputError("ball state index out of range");
    mask(s) = 1.0;
  }
  return mask;
}

// Unique stationary distribution from (P^T - I) pi = 0, sum pi = 1.
// Throws DegenerateError when the kernel of P^T - I has dimension > 1 and
// NumericError if the l1 residual exceeds 1e-12.
Eigen::VectorXd chain_stationary(const Chain& chain);

// Communicating-class structure and limit behaviour of P^n.
struct ChainStructure {
  std::vector<int> class_of;            // class id per state
  std::vector<bool> class_closed;       // per class
  std::vector<int> class_period;        // per class (0 for transient classes)
  std::vector<std::vector<bool>> reach; // reach[i][j]: j reachable from i in >= 0 steps
  int period = 1;                       // lcm of the closed classes' periods
  // residue_limits[r] = lim_m P^{m * period + r}; the Cesaro limit is their mean.
  std::vector<Eigen::MatrixXd> residue_limits;
};

ChainStructure analyze_chain(const Chain& chain);

// Exact limits of per-step and Cesaro ball masses from `dist`.
struct LimitMasses {
  double liminf;   // liminf_n (P^n)^T dist (ball)
  double limsup;
  double cesaro;   // lim_n Q_n dist (ball)
  bool cesaro_positive_structural;  // ball meets a closed class reachable from supp(dist)
};

LimitMasses limit_ball_masses(const Chain& chain, const ChainStructure& structure,
                              const Eigen::VectorXd& dist, const std::vector<Eigen::Index>& ball);

}  // namespace feller
