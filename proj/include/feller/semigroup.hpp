#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "feller/chain.hpp"
#include "feller/measure.hpp"
#include "feller/system.hpp"

namespace feller {

struct PrunePolicy {
  bool enabled = true;
  double mass_floor = 1e-12;
  double merge_radius = 0.0;
  double budget = 1e-9;  // total dropped mass allowed over a trace
  Eigen::Index support_cap = kDefaultDualStepCap;

  static PrunePolicy disabled() {
    PrunePolicy p;
    p.enabled = false;
    return p;
  }
};

// Orbit of a measure under the dual operator. measures[k] is the state after
// steps[k] steps; prune_loss[k] is the cumulative dropped mass up to that
// entry, so 2 * prune_loss[k] bounds the TV deviation from the unpruned orbit.
struct EvolutionTrace {
  std::vector<FiniteMeasure> measures;
  std::vector<std::size_t> steps;
  std::vector<double> prune_loss;
  std::vector<double> merge_slack;  // cumulative transport slack from merging
  std::optional<std::uint64_t> seed;
  PrunePolicy policy;
};

EvolutionTrace evolve_exact(const DiscreteIFS& ifs, const FiniteMeasure& m0, std::size_t steps,
                            const PrunePolicy& policy = {});

struct ParticleOptions {
  std::size_t count = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::size_t record_stride = 1;  // record every k-th step (and always the last)
};

// Positions of independent trajectories, one column each. Trajectory j draws
// its randomness for step k from KeyedStream(seed, j, k), so the cloud is a
// function of the seed alone. Step 0 streams seed the initial sampling.
class ParticleCloud {
 public:
  ParticleCloud(const Point& start, std::size_t count);
  ParticleCloud(const FiniteMeasure& start, std::size_t count, std::uint64_t seed);
  explicit ParticleCloud(Eigen::MatrixXd positions) : positions_(std::move(positions)) {}

  // Moves every particle by one kernel step, using step index `step` (>= 1).
  void advance(const MarkovSystem& system, std::size_t step, std::uint64_t seed, unsigned threads);

  const Eigen::MatrixXd& positions() const { return positions_; }
  std::size_t count() const { return static_cast<std::size_t>(positions_.cols()); }
  FiniteMeasure empirical() const;

 private:
  Eigen::MatrixXd positions_;
};

using StartSpec = std::variant<Point, FiniteMeasure>;

EvolutionTrace evolve_particles(const MarkovSystem& system, const StartSpec& start,
                                std::size_t steps, const ParticleOptions& options);

// Q_n = (1/n) sum_{k=1}^n of the supplied measures (the caller passes steps 1..n).
FiniteMeasure cesaro_average(std::span<const FiniteMeasure> slice);
// Uses trace.measures[1..n]; requires an unstrided trace of length > n.
FiniteMeasure cesaro_average(const EvolutionTrace& trace, std::size_t n);

// Monte Carlo tolerance used when comparing particle and exact traces.
inline double mc_tolerance(std::size_t particles) {
  return 1.0 / std::sqrt(static_cast<double>(particles));
}

// ---- exact chain operators ------------------------------------------------

// (1/t) sum_{s=1}^t P^s as a row-stochastic matrix.
template <typename Scalar>
typename ExactChain<Scalar>::Matrix cesaro_matrix(const ExactChain<Scalar>& chain, std::size_t t) {
  using Matrix = typename ExactChain<Scalar>::Matrix;
  if (t == 0) throw InputError("Cesaro time must be >= 1");
  const Matrix& P = chain.matrix();
  Matrix power = P, sum = P;
  for (std::size_t s = 2; s <= t; ++s) {
    power = power * P;
    sum += power;
  }
  return sum / static_cast<Scalar>(t);
}

template <typename Scalar>
typename ExactChain<Scalar>::Vector cesaro_vector(const ExactChain<Scalar>& chain,
                                                  const typename ExactChain<Scalar>::Vector& dist,
                                                  std::size_t n) {
  require_distribution(chain, dist);
  if (n == 0) throw InputError("Cesaro average needs n >= 1");
  const auto PT = chain.matrix().transpose();
  typename ExactChain<Scalar>::Vector cur = dist, sum = ExactChain<Scalar>::Vector::Zero(dist.size());
  for (std::size_t k = 1; k <= n; ++k) {
    cur = PT * cur;
    sum += cur;
  }
  return sum / static_cast<Scalar>(n);
}

// || P* Q_n delta_z - Q_n delta_z ||_TV via the telescoping identity
// (1/n) || P^{n+1} delta_z - P delta_z ||_1; at most 2/n.
template <typename Scalar>
Scalar cesaro_tv_residual(const ExactChain<Scalar>& chain, Eigen::Index z, std::size_t n) {
  if (n == 0) throw InputError("cesaro_tv_residual needs n >= 1");
  const auto PT = chain.matrix().transpose();
  const typename ExactChain<Scalar>::Vector first = PT * chain.basis(z);
  typename ExactChain<Scalar>::Vector cur = first;
  for (std::size_t k = 1; k <= n; ++k) cur = PT * cur;
  Scalar tv = (cur - first).cwiseAbs().sum();
  if (tv > Scalar(2)) tv = Scalar(2);
  return tv / static_cast<Scalar>(n);
}

// Q_T Q_{t_k} ... Q_{t_1} dist.
template <typename Scalar>
typename ExactChain<Scalar>::Vector composed_cesaro(const ExactChain<Scalar>& chain,
                                                    const typename ExactChain<Scalar>::Vector& dist,
                                                    const std::vector<std::size_t>& times,
                                                    std::size_t T) {
  require_distribution(chain, dist);
  typename ExactChain<Scalar>::Vector out = dist;
  for (std::size_t t : times) out = cesaro_matrix(chain, t).transpose() * out;
  return cesaro_matrix(chain, T).transpose() * out;
}

// sup over the simplex of || Q_{T, t_k..t_1} mu - Q_T mu ||_TV. The map is
// affine in mu and TV is convex, so the sup is attained at a basis vector:
// the largest row l1-norm of (C_{t_1} ... C_{t_k} C_T - C_T).
template <typename Scalar>
Scalar composed_cesaro_gap(const ExactChain<Scalar>& chain, const std::vector<std::size_t>& times,
                           std::size_t T) {
  using Matrix = typename ExactChain<Scalar>::Matrix;
  const Matrix CT = cesaro_matrix(chain, T);
  Matrix M = Matrix::Identity(chain.states(), chain.states());
  for (std::size_t t : times) M = M * cesaro_matrix(chain, t);
  return (M * CT - CT).cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace feller
