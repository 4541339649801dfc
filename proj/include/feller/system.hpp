#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "feller/geometry.hpp"
#include "feller/measure.hpp"
#include "feller/rng.hpp"

namespace feller {

// x -> A x + b
struct AffineMap {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  AffineMap(Eigen::MatrixXd A, Eigen::VectorXd b);

  // Scalar convenience for d = 1: x -> slope * x + offset.
  static AffineMap scalar(double slope, double offset);

  Eigen::Index dim() const { return b.size(); }

  template <typename Derived>
  Point operator()(const Eigen::MatrixBase<Derived>& x) const {
    return A * x + b;
  }

  // Lipschitz constant w.r.t. `metric`: spectral norm (euclidean), max row
  // sum (chebyshev), max(spectral norm, 1) for the truncated metric.
  double lipschitz(const MetricSpec& metric) const;
};

// p_i(x), i = 1..N. Sums to one by construction.
class ProbabilityField {
 public:
  static ProbabilityField constant(Eigen::VectorXd weights);
  // p_i(x) = exp(theta_i . x + c_i) / sum_j exp(theta_j . x + c_j);
  // theta is N x d, one row per map.
  static ProbabilityField softmax(Eigen::MatrixXd theta, Eigen::VectorXd offsets);

  bool is_constant() const { return theta_.size() == 0; }
  Eigen::Index count() const { return offsets_.size(); }
  const Eigen::VectorXd& constant_weights() const { return offsets_; }
  const Eigen::MatrixXd& theta() const { return theta_; }
  const Eigen::VectorXd& offsets() const { return offsets_; }

  template <typename Derived>
  Eigen::VectorXd operator()(const Eigen::MatrixBase<Derived>& x) const {
    if (is_constant()) return offsets_;
    Eigen::VectorXd logits = theta_ * x + offsets_;
    logits.array() -= logits.maxCoeff();
    Eigen::VectorXd p = logits.array().exp();
    return p / p.sum();
  }

  // Analytic a with sum_i |p_i(x) - p_i(y)| <= a rho(x, y). Zero for constant
  // fields; half the largest dual-norm spread of the theta rows for softmax
  // (max(that, 2/cap) under the truncated metric).
  double lipschitz_bound(const MetricSpec& metric) const;

 private:
  ProbabilityField(Eigen::MatrixXd theta, Eigen::VectorXd offsets)
      : theta_(std::move(theta)), offsets_(std::move(offsets)) {}

  Eigen::MatrixXd theta_;    // empty for constant fields
  Eigen::VectorXd offsets_;  // weights (constant) or c_i (softmax)
};

// Place-dependent IFS: Pf(x) = sum_i f(w_i(x)) p_i(x).
struct DiscreteIFS {
  std::vector<AffineMap> maps;
  ProbabilityField probs;
  MetricSpec metric;

  DiscreteIFS(std::vector<AffineMap> maps, ProbabilityField probs,
              MetricSpec metric = MetricSpec::euclidean());
  Eigen::Index dim() const { return maps.front().dim(); }
};

// Diagonal exponential semi-flow S(t)x = (e^{lambda_1 t} x_1, ...).
struct FlowSpec {
  Eigen::VectorXd lambda;

  explicit FlowSpec(Eigen::VectorXd lambda);
  double kappa() const { return lambda.maxCoeff(); }

  template <typename Derived>
  Point operator()(double t, const Eigen::MatrixBase<Derived>& x) const {
    return ((lambda * t).array().exp() * x.array()).matrix();
  }
};

// Flow for an Exp(gamma) time, then a jump through a randomly chosen map.
struct JumpFlowSystem {
  FlowSpec flow;
  double gamma;
  std::vector<AffineMap> maps;
  ProbabilityField probs;
  MetricSpec metric;

  JumpFlowSystem(FlowSpec flow, double gamma, std::vector<AffineMap> maps, ProbabilityField probs,
                 MetricSpec metric = MetricSpec::euclidean());
  Eigen::Index dim() const { return maps.front().dim(); }
};

using MarkovSystem = std::variant<DiscreteIFS, JumpFlowSystem>;

Eigen::Index system_dim(const MarkovSystem& system);
const MetricSpec& system_metric(const MarkovSystem& system);

// One draw from the transition kernel. Throws NumericError naming the
// trajectory and step of `stream` if the result is not finite.
Point step_sample(const DiscreteIFS& ifs, const Point& x, KeyedStream& stream);
Point step_sample(const JumpFlowSystem& system, const Point& x, KeyedStream& stream);
Point step_sample(const MarkovSystem& system, const Point& x, KeyedStream& stream);

inline constexpr Eigen::Index kDefaultDualStepCap = Eigen::Index{1} << 22;

// P* m, exactly: atoms (w_i(x_j), p_i(x_j) w_j), merged. Throws ResourceError
// when N * |supp m| exceeds `cap`.
FiniteMeasure dual_step_exact(const DiscreteIFS& ifs, const FiniteMeasure& m,
                              Eigen::Index cap = kDefaultDualStepCap);

double apply_P(const DiscreteIFS& ifs, const TestFunction& f, const Point& x);
// Adaptive Simpson on [0, -ln(1e-10)/gamma]; throws NumericError when the
// absolute tolerance is not reached.
double apply_P(const JumpFlowSystem& system, const TestFunction& f, const Point& x,
               double tolerance = 1e-9);
double apply_P(const MarkovSystem& system, const TestFunction& f, const Point& x);

// Axis-aligned box pairs are drawn from by the hypothesis checkers.
struct SampleBox {
  Point lo;
  Point hi;
  static SampleBox cube(Eigen::Index dim, double lo, double hi);
};

// Sampled maximum of a ratio together with an analytic bound when one exists.
// Sampled-only results are evidence; `analytic` results are bounds.
struct ConditionEstimate {
  double observed = 0.0;
  std::optional<double> analytic;
  std::size_t pairs = 0;

  // The analytic bound when available, the observed maximum otherwise.
  double value() const { return analytic ? *analytic : observed; }
  const char* basis() const { return analytic ? "analytic bound" : "sampled evidence"; }
};

// sum_i p_i(x) rho(w_i x, w_i y) / rho(x, y)
ConditionEstimate check_avg_contraction(const DiscreteIFS& ifs, std::size_t pairs,
                                        std::uint64_t seed, const SampleBox& box);
// sum_i |p_i(x) - p_i(y)| / rho(x, y)
ConditionEstimate check_prob_lipschitz(const DiscreteIFS& ifs, std::size_t pairs,
                                       std::uint64_t seed, const SampleBox& box);
// log(rho(S(t)x, S(t)y) / rho(x, y)) / t over t in (0, t_max]
ConditionEstimate check_flow_expansion(const FlowSpec& flow, const MetricSpec& metric,
                                       std::size_t pairs, double t_max, std::uint64_t seed,
                                       const SampleBox& box);

struct SpectralGapCheck {
  double value;  // r + kappa / gamma
  bool pass;     // value < 1
};
SpectralGapCheck check_spectral_gap_condition(double r, double kappa, double gamma);

// r(t) = c t^q
struct PowerModulus {
  double c;
  double q;
  double operator()(double t) const;
};
// omega(t) = a t^beta
struct OmegaModulus {
  double a;
  double beta;
  double operator()(double t) const;
};
struct ModulusPair {
  PowerModulus r;
  OmegaModulus omega;
};

struct ModuliReport {
  std::vector<double> grid;
  std::vector<double> partial_sums;  // S_N(t) = sum_{n=1}^N omega(r^n(t))
  std::vector<double> tail_bounds;   // bound on sum_{n>N}; +inf when divergent
  std::vector<double> witnesses;     // grid points where r(t) >= t
  bool concave = false;
  bool pass = false;                 // every tail < 1e-9 and r(t) < t on the grid
};

ModuliReport check_moduli_pair(const ModulusPair& pair, const std::vector<double>& grid,
                               std::size_t terms);

}  // namespace feller
