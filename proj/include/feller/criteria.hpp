#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "feller/chain.hpp"
#include "feller/measure.hpp"
#include "feller/semigroup.hpp"
#include "feller/system.hpp"

namespace feller {

using Json = nlohmann::json;

// Anything the estimators can run on. Chains are always evaluated exactly.
using Model = std::variant<DiscreteIFS, JumpFlowSystem, Chain>;

enum class Verdict { supported, refuted, inconclusive };
const char* to_string(Verdict v);

// Only exact computations or analytic bounds may refute; Monte Carlo
// evidence yields supported or inconclusive.
struct CriterionReport {
  std::string name;
  Json estimates = Json::object();
  Verdict verdict = Verdict::inconclusive;
  Json parameters = Json::object();
  std::vector<std::string> caveats;
};

enum class EvalMode { exact, sampler };

struct SamplerOptions {
  std::size_t particles = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

// 16 tents centred on a Halton grid over [lo, hi] with scale a quarter of the
// box diameter (at least 1e-3), followed by clamp(x_i, -1, 1) per coordinate.
std::vector<TestFunction> default_dictionary(const Point& lo, const Point& hi,
                                             const MetricSpec& metric);

// Dictionary functions as state vectors: evaluated at the embedding when the
// chain has one and `dictionary` is nonempty, state indicators otherwise.
std::vector<Eigen::VectorXd> chain_dictionary(const Chain& chain,
                                              const std::vector<TestFunction>& dictionary);

// Exact proof that every trajectory leaves a ball for good: all maps are
// translations x -> x + b_i and some direction u has u . b_i >= drift > 0 for
// every map chosen with positive probability.
struct EscapeCertificate {
  Point direction;
  double drift;
};
std::optional<EscapeCertificate> escape_certificate(const DiscreteIFS& ifs);
// Last step at which a trajectory from x can still be inside `ball`.
std::size_t escape_step(const EscapeCertificate& cert, const MetricSpec& metric, const Ball& ball,
                        const Point& x);

struct LowerBoundParams {
  Point z;
  double eps = 0.1;
  std::vector<Point> starts;                // metric systems
  std::vector<Eigen::Index> start_states;   // chains; all states when empty
  std::vector<Eigen::Index> ball_states;    // chains; from B(z, eps) and the embedding when empty
  std::size_t horizon = 1000;
  std::size_t window = 50;
  SamplerOptions sampler;
};

// Cesaro ball frequency (1/m) sum_{i<=m} 1{Phi_i in B(z, eps)} at the
// checkpoints m = w, 2w, ..., n; the liminf proxy is the minimum over the
// trailing half. Chains report the exact Cesaro limit as well.
CriterionReport lower_bound_mass_estimate(const Model& model, const LowerBoundParams& params);

// Per-step ball masses P^m delta_x(B(z, eps)) at the same checkpoints;
// liminf proxy per start, infimum over the start grid.
CriterionReport stability_lower_bound_estimate(const Model& model, const LowerBoundParams& params);

struct EPropertyParams {
  Point x;
  std::vector<double> radii;  // positive, decreasing
  std::size_t horizon = 12;
  EvalMode mode = EvalMode::sampler;
  SamplerOptions sampler;
  PrunePolicy policy;  // exact mode
};

// M(r) = max_phi max_{n<=N} |P^n phi(y_r) - P^n phi(x)| with y_r = x + r e_1, each phi
// divided by max(1, Lip phi) first.
CriterionReport e_property_probe(const MarkovSystem& system, const std::vector<TestFunction>& dictionary,
                                 const EPropertyParams& params);

struct CauchyParams {
  Point z;
  Eigen::Index z_state = 0;         // chains
  std::vector<std::size_t> grid;    // increasing, >= 2 entries
  EvalMode mode = EvalMode::sampler;
  SamplerOptions sampler;
  std::size_t full_depth = 6;       // exact mode: unpruned steps
  double merge_radius = 1e-4;       // exact mode: merging after full_depth
};

// D(n, m) = max_phi |<phi, Q_n delta_z> - <phi, Q_m delta_z>| over the grid,
// plus D(n, 2n) for each grid entry.
CriterionReport cauchy_diagnostic(const Model& model, const std::vector<TestFunction>& dictionary,
                                  const CauchyParams& params);

// fm_distance(P* candidate, candidate).
double invariant_residual(const DiscreteIFS& ifs, const FiniteMeasure& candidate);

struct UniformParams {
  std::vector<Point> grid;                // metric systems
  std::vector<Eigen::Index> grid_states;  // chains; all states when empty
  std::optional<FiniteMeasure> mu_star;
  std::optional<Eigen::VectorXd> mu_star_chain;
  std::size_t horizon = 20;
  EvalMode mode = EvalMode::sampler;
  SamplerOptions sampler;
  PrunePolicy policy;
  double tolerance = 0.05;
};

// sup_{x in K} max_phi |P^n phi(x) - <phi, mu*>| for n = 0..horizon.
CriterionReport uniform_compact_convergence(const Model& model,
                                            const std::vector<TestFunction>& dictionary,
                                            const UniformParams& params);

}  // namespace feller
