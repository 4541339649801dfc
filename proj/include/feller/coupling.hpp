#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "feller/chain.hpp"
#include "feller/measure.hpp"

namespace feller {

// sigma_k = alpha * prod_{j=1}^k (1 - epsilon^{1/j}), k = 1..K.
struct SigmaSchedule {
  double alpha;
  double epsilon;
  std::size_t K;
  std::vector<double> sigmas;  // sigmas[k-1] = sigma_k

  double operator[](std::size_t k) const { return sigmas.at(k - 1); }
};

// Throws InputError unless alpha, epsilon are in (0, 1) and K >= 1.
SigmaSchedule sigma_schedule(double alpha, double epsilon, std::size_t K);

// (1 - alpha(1 + eps)) / (1 - alpha(1 - eps^{1/k})^k) - (1 - eps^{1/(k+1)}),
// evaluated without cancellation for tiny eps. Throws DomainError for
// parameters outside alpha, eps in (0, 1), k >= 1.
double lemma_ineq_margin(double alpha, std::size_t k, double epsilon);

struct LemmaThreshold {
  double epsilon_star;  // margin > 0 on (0, epsilon_star]
  bool whole_range;     // margin stayed positive up to the search ceiling
  std::size_t bisection_steps;
};

// Largest eps* <= ceiling such that the margin is positive on (floor, eps*]:
// a log-spaced scan locates the first sign change above `floor`, then
// bisection in log eps refines it. Throws DomainError if the margin is not
// positive at `floor`.
LemmaThreshold lemma_threshold(double alpha, std::size_t k, double floor = 1e-300,
                               double ceiling = 0.5, std::size_t scan_points = 4096,
                               std::size_t bisection_steps = 60);

// ---- ball splits ------------------------------------------------------------

// m = sigma * nu + (1 - sigma) * remainder with nu = m conditioned on the ball.
struct MeasureSplit {
  FiniteMeasure nu;
  FiniteMeasure remainder;
  double ball_mass;
};

// Throws InadmissibleSplit (step 0) when m(ball) <= sigma, InputError for
// sigma outside [0, 1).
MeasureSplit ball_split(const FiniteMeasure& m, const Ball& ball, double sigma,
                        const MetricSpec& metric);

struct VectorSplit {
  Eigen::VectorXd nu;
  Eigen::VectorXd remainder;
  double ball_mass;
};

// Chain version; `ball` is a 0/1 state mask. `step` is reported on failure.
VectorSplit ball_split(const Eigen::VectorXd& dist, const Eigen::VectorXd& ball, double sigma,
                       std::size_t step = 0);

// ---- decompositions on exact chains ------------------------------------------

enum class TermTag { nu, mu_remainder };
const char* to_string(TermTag tag);

struct DecompositionTerm {
  double coefficient;
  Eigen::VectorXd propagated;  // the measure entering the mixture
  Eigen::VectorXd base;        // nu^j (or mu^k) before propagation
  TermTag tag;
  std::size_t step;            // j for nu^j, k for the remainder
};

struct DecompositionCertificate {
  std::vector<DecompositionTerm> terms;
  Eigen::VectorXd target;              // the vector being decomposed
  double reconstruction_residual = 0;  // || sum coef * propagated - target ||_1
  double coefficient_sum = 0;
  std::vector<double> ball_mass_witnesses;  // nu^j(ball), one per nu term
  std::vector<double> split_masses;         // mass of the ball before each split
  std::vector<double> required_masses;      // sigma_k or alpha
  double max_outside_mass = 0;              // largest nu^j mass outside the ball
};

// Q_{t_K}...Q_{t_1} start = sum_k sigma_k prod_{s<k}(1 - sigma_s) Q_{t_K..t_{k+1}} nu^k
//                          + prod_{s<=K}(1 - sigma_s) mu^K,
// built by splitting Q_{t_k} mu^{k-1} on the ball with mass sigma_k.
// Uses the first times.size() entries of the schedule; throws
// InadmissibleSplit identifying the step when the ball mass is <= sigma_k.
DecompositionCertificate chain_decomposition(const Chain& chain, const Eigen::VectorXd& start,
                                             const std::vector<Eigen::Index>& ball_states,
                                             const SigmaSchedule& schedule,
                                             const std::vector<std::size_t>& times);

// P^{t_1+..+t_k} mu = sum_j alpha (1-alpha)^{j-1} P^{t_{j+1}+..+t_k} nu^j + (1-alpha)^k mu^k,
// for each of the two starting distributions.
struct TelescopingPair {
  DecompositionCertificate first;
  DecompositionCertificate second;
};

TelescopingPair telescoping_decomposition(const Chain& chain, const Eigen::VectorXd& mu1,
                                          const Eigen::VectorXd& mu2,
                                          const std::vector<Eigen::Index>& ball_states,
                                          double alpha, const std::vector<std::size_t>& times);

// Smallest times t_k in [1, t_max] with P^{t_k} mu_i^{k-1}(ball) > alpha for
// both i, chosen step by step as in the telescoping construction. Throws
// InadmissibleSplit when no admissible time exists up to t_max.
std::vector<std::size_t> telescoping_times(const Chain& chain, const Eigen::VectorXd& mu1,
                                           const Eigen::VectorXd& mu2,
                                           const std::vector<Eigen::Index>& ball_states,
                                           double alpha, std::size_t k, std::size_t t_max);

// Increasing Cesaro times by doubling: t_1 = t_start and t_{k+1} is the first
// doubling of t_k for which every composed gap sup ||Q_{T,t_k..t_j} - Q_T||
// (j <= k) at T = t_{k+1} is below `gap_threshold`. Throws ResourceError past
// t_max.
struct CesaroTimes {
  std::vector<std::size_t> times;
  std::vector<double> gaps;  // worst gap accepted at each step
};
CesaroTimes doubling_cesaro_times(const Chain& chain, std::size_t K, double gap_threshold,
                                  std::size_t t_start = 1, std::size_t t_max = 1u << 16);

struct CouplingBoundRow {
  std::size_t k;
  std::size_t t;     // t_1 + ... + t_k
  double lhs;        // max_phi |<phi, P^t mu1> - <phi, P^t mu2>|
  double rhs;        // epsilon_phi + 2 (1 - alpha)^k
  bool pass;
};

struct CouplingBoundReport {
  double epsilon_phi;  // max_phi max_{s <= t} osc_{ball} P^s phi
  std::vector<CouplingBoundRow> rows;
  TelescopingPair certificates;
  bool pass;
};

// Checks lhs <= rhs + 1e-12 at every prefix sum of `times`. Dictionary
// functions are vectors of state values bounded by 1 in absolute value.
CouplingBoundReport coupling_bound_check(const Chain& chain, const Eigen::VectorXd& mu1,
                                         const Eigen::VectorXd& mu2, double alpha,
                                         const std::vector<std::size_t>& times,
                                         const std::vector<Eigen::Index>& ball_states,
                                         const std::vector<Eigen::VectorXd>& dictionary);

}  // namespace feller
