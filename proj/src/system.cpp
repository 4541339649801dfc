#include "feller/system.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "feller/errors.hpp"

namespace feller {

namespace {

// Index drawn with probabilities p by inversion of one uniform.
Eigen::Index draw_index(const Eigen::VectorXd& p, double u) {
  double acc = 0.0;
  const Eigen::Index last = p.size() - 1;
  for (Eigen::Index i = 0; i < last; ++i) {
    acc += p(i);
    if (u < acc) return i;
  }
  // Skip trailing zero-probability branches that rounding would otherwise hit.
  Eigen::Index i = last;
  while (i > 0 && p(i) == 0.0) --i;
  return i;
}

void check_maps(const std::vector<AffineMap>& maps, const ProbabilityField& probs) {
  if (maps.empty()) throw InputError("system needs at least one map");
  const Eigen::Index d = maps.front().dim();
  for (const auto& m : maps) {
    if (m.dim() != d) throw InputError("maps of differing dimension");
  }
  if (probs.count() != static_cast<Eigen::Index>(maps.size())) {
    throw InputError("probability field has " + std::to_string(probs.count()) +
                     " entries for " + std::to_string(maps.size()) + " maps");
  }
  if (!probs.is_constant() && probs.theta().cols() != d) {
    throw InputError("softmax theta has wrong column count");
  }
}

[[noreturn]] void non_finite(const KeyedStream& s, const char* what) {
  throw NumericError(std::string(what) + " produced a non-finite state on trajectory " +
                     std::to_string(s.trajectory()) + " at step " + std::to_string(s.step()));
}

Point random_point(const SampleBox& box, KeyedStream& s) {
  Point x(box.lo.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    x(k) = box.lo(k) + (box.hi(k) - box.lo(k)) * s.uniform();
  }
  return x;
}

// Pair i is global (two independent box points) for even i, local (a point
// and a perturbation of log-uniform size in [1e-6, 1e-1]) for odd i.
std::pair<Point, Point> sample_pair(const SampleBox& box, std::uint64_t seed, std::size_t i) {
  KeyedStream s(seed, i, 0);
  Point x = random_point(box, s);
  Point y;
  if (i % 2 == 0) {
    y = random_point(box, s);
  } else {
    Point dir(x.size());
    for (Eigen::Index k = 0; k < dir.size(); ++k) dir(k) = 2.0 * s.uniform() - 1.0;
    if (dir.norm() == 0.0) dir.setOnes();
    const double scale = std::pow(10.0, -6.0 + 5.0 * s.uniform());
    y = x + scale * dir.normalized();
  }
  return {std::move(x), std::move(y)};
}

void check_box(const SampleBox& box, Eigen::Index dim) {
  if (box.lo.size() != dim || box.hi.size() != dim) throw InputError("sample box dimension mismatch");
  if (!(box.lo.array() <= box.hi.array()).all()) throw InputError("sample box has lo > hi");
}

// Adaptive Simpson with an error-budget split; leaves that exhaust the depth
// limit add their error estimate to `unresolved`.
double simpson(const std::function<double(double)>& g, double a, double b, double fa, double fm,
               double fb, double whole, double eps, int depth, double& unresolved) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = g(lm), frm = g(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (std::abs(diff) <= 15.0 * eps) return left + right + diff / 15.0;
  if (depth <= 0) {
    unresolved += std::abs(diff) / 15.0;
    return left + right + diff / 15.0;
  }
  return simpson(g, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1, unresolved) +
         simpson(g, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1, unresolved);
}

}  // namespace

AffineMap::AffineMap(Eigen::MatrixXd a, Eigen::VectorXd offset) : A(std::move(a)), b(std::move(offset)) {
  if (b.size() == 0) throw InputError("affine map of dimension 0");
  if (A.rows() != b.size() || A.cols() != b.size()) throw InputError("affine map A must be d x d");
  if (!A.allFinite() || !b.allFinite()) throw InputError("affine map entries must be finite");
}

AffineMap AffineMap::scalar(double slope, double offset) {
  return AffineMap(Eigen::MatrixXd::Constant(1, 1, slope), Eigen::VectorXd::Constant(1, offset));
}

double AffineMap::lipschitz(const MetricSpec& metric) const {
  switch (metric.kind) {
    case MetricKind::chebyshev:
      return A.cwiseAbs().rowwise().sum().maxCoeff();
    case MetricKind::truncated:
      return std::max(1.0, Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0));
    case MetricKind::euclidean:
    default:
      return Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
  }
}

ProbabilityField ProbabilityField::constant(Eigen::VectorXd weights) {
  if (weights.size() == 0) throw InputError("probability field needs at least one entry");
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw InputError("constant probabilities must be finite and nonnegative");
  }
  const double s = weights.sum();
  if (std::abs(s - 1.0) > kMassTolerance) throw InputError("constant probabilities must sum to 1");
  return ProbabilityField(Eigen::MatrixXd(), weights / s);
}

ProbabilityField ProbabilityField::softmax(Eigen::MatrixXd theta, Eigen::VectorXd offsets) {
  if (offsets.size() == 0 || theta.rows() != offsets.size() || theta.cols() == 0) {
    throw InputError("softmax needs theta (N x d) and N offsets");
  }
  if (!theta.allFinite() || !offsets.allFinite()) throw InputError("softmax parameters must be finite");
  return ProbabilityField(std::move(theta), std::move(offsets));
}

double ProbabilityField::lipschitz_bound(const MetricSpec& metric) const {
  if (is_constant()) return 0.0;
  // For a unit direction v, sum_i |dp_i . v| = sum_i p_i |s_i - mean(s)| with
  // s_i = theta_i . v, which is at most half the spread of the s_i.
  double spread = 0.0;
  for (Eigen::Index i = 0; i < theta_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < theta_.rows(); ++j) {
      const Eigen::VectorXd diff = theta_.row(i) - theta_.row(j);
      const double dual = metric.kind == MetricKind::chebyshev ? diff.lpNorm<1>() : diff.norm();
      spread = std::max(spread, dual);
    }
  }
  const double bound = 0.5 * spread;
  if (metric.kind == MetricKind::truncated) return std::max(bound, 2.0 / metric.cap);
  return bound;
}

DiscreteIFS::DiscreteIFS(std::vector<AffineMap> m, ProbabilityField p, MetricSpec metric_)
    : maps(std::move(m)), probs(std::move(p)), metric(metric_) {
  check_maps(maps, probs);
  metric.validate();
}

FlowSpec::FlowSpec(Eigen::VectorXd l) : lambda(std::move(l)) {
  if (lambda.size() == 0 || !lambda.allFinite()) throw InputError("flow exponents must be finite");
}

JumpFlowSystem::JumpFlowSystem(FlowSpec f, double g, std::vector<AffineMap> m, ProbabilityField p,
                               MetricSpec metric_)
    : flow(std::move(f)), gamma(g), maps(std::move(m)), probs(std::move(p)), metric(metric_) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InputError("clock rate gamma must be > 0");
  check_maps(maps, probs);
  if (flow.lambda.size() != maps.front().dim()) throw InputError("flow dimension mismatch");
  metric.validate();
}

Eigen::Index system_dim(const MarkovSystem& system) {
  return std::visit([](const auto& s) { return s.dim(); }, system);
}

const MetricSpec& system_metric(const MarkovSystem& system) {
  return std::visit([](const auto& s) -> const MetricSpec& { return s.metric; }, system);
}

Point step_sample(const DiscreteIFS& ifs, const Point& x, KeyedStream& stream) {
  const Eigen::Index i = draw_index(ifs.probs(x), stream.uniform());
  Point y = ifs.maps[i](x);
  if (!y.allFinite()) non_finite(stream, "IFS step");
  return y;
}

Point step_sample(const JumpFlowSystem& system, const Point& x, KeyedStream& stream) {
  const double dt = stream.exponential(system.gamma);
  const Point xi = system.flow(dt, x);
  if (!xi.allFinite()) non_finite(stream, "flow");
  const Eigen::Index i = draw_index(system.probs(xi), stream.uniform());
  Point y = system.maps[i](xi);
  if (!y.allFinite()) non_finite(stream, "jump");
  return y;
}

Point step_sample(const MarkovSystem& system, const Point& x, KeyedStream& stream) {
  return std::visit([&](const auto& s) { return step_sample(s, x, stream); }, system);
}

FiniteMeasure dual_step_exact(const DiscreteIFS& ifs, const FiniteMeasure& m, Eigen::Index cap) {
  if (m.dim() != ifs.dim()) throw InputError("dual_step_exact: dimension mismatch");
  const Eigen::Index n = m.size();
  const Eigen::Index N = static_cast<Eigen::Index>(ifs.maps.size());
  if (n * N > cap) {
    throw ResourceError("dual_step_exact: " + std::to_string(n * N) + " atoms exceed cap " +
                        std::to_string(cap));
  }
  Eigen::MatrixXd probs(N, n);
  if (ifs.probs.is_constant()) {
    probs = ifs.probs.constant_weights().replicate(1, n);
  } else {
    for (Eigen::Index j = 0; j < n; ++j) probs.col(j) = ifs.probs(m.points().col(j));
  }
  Eigen::MatrixXd pts(m.dim(), n * N);
  Eigen::VectorXd w(n * N);
  for (Eigen::Index i = 0; i < N; ++i) {
    pts.middleCols(i * n, n) = (ifs.maps[i].A * m.points()).colwise() + ifs.maps[i].b;
    w.segment(i * n, n) = probs.row(i).transpose().cwiseProduct(m.weights());
  }
  return FiniteMeasure::from_unnormalized(std::move(pts), std::move(w));
}

double apply_P(const DiscreteIFS& ifs, const TestFunction& f, const Point& x) {
  const Eigen::VectorXd p = ifs.probs(x);
  double s = 0.0;
  for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (p(k) != 0.0) s += p(k) * f(ifs.maps[i](x));
  }
  return s;
}

double apply_P(const JumpFlowSystem& system, const TestFunction& f, const Point& x,
               double tolerance) {
  const double t_cut = -std::log(1e-10) / system.gamma;
  const std::function<double(double)> g = [&](double t) {
    const Point xi = system.flow(t, x);
    const Eigen::VectorXd p = system.probs(xi);
    double s = 0.0;
    for (std::size_t i = 0; i < system.maps.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (p(k) != 0.0) s += p(k) * f(system.maps[i](xi));
    }
    return system.gamma * std::exp(-system.gamma * t) * s;
  };
  // Split into panels so the recursion starts from a reasonable resolution.
  constexpr int kPanels = 64;
  double total = 0.0, unresolved = 0.0;
  for (int k = 0; k < kPanels; ++k) {
    const double a = t_cut * k / kPanels, b = t_cut * (k + 1) / kPanels;
    const double fa = g(a), fm = g(0.5 * (a + b)), fb = g(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    total += simpson(g, a, b, fa, fm, fb, whole, tolerance / kPanels, 40, unresolved);
  }
  if (!std::isfinite(total)) throw NumericError("apply_P quadrature produced a non-finite value");
  if (unresolved > tolerance) {
    throw NumericError("apply_P quadrature reached only " + std::to_string(unresolved) +
                       " absolute accuracy (requested " + std::to_string(tolerance) + ")");
  }
  return total;
}

double apply_P(const MarkovSystem& system, const TestFunction& f, const Point& x) {
  return std::visit([&](const auto& s) { return apply_P(s, f, x); }, system);
}

SampleBox SampleBox::cube(Eigen::Index dim, double lo, double hi) {
  return {Point::Constant(dim, lo), Point::Constant(dim, hi)};
}

ConditionEstimate check_avg_contraction(const DiscreteIFS& ifs, std::size_t pairs,
                                        std::uint64_t seed, const SampleBox& box) {
  if (pairs == 0) throw InputError("pair-sample size must be >= 1");
  check_box(box, ifs.dim());
  ConditionEstimate out;
  for (std::size_t k = 0; k < pairs; ++k) {
    const auto [x, y] = sample_pair(box, seed, k);
    const double rho = distance(ifs.metric, x, y);
    if (rho == 0.0) continue;
    const Eigen::VectorXd p = ifs.probs(x);
    double s = 0.0;
    for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
      s += p(static_cast<Eigen::Index>(i)) * distance(ifs.metric, ifs.maps[i](x), ifs.maps[i](y));
    }
    out.observed = std::max(out.observed, s / rho);
    ++out.pairs;
  }
  double bound = 0.0;
  if (ifs.probs.is_constant()) {
    for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
      bound += ifs.probs.constant_weights()(static_cast<Eigen::Index>(i)) *
               ifs.maps[i].lipschitz(ifs.metric);
    }
  } else {
    for (const auto& m : ifs.maps) bound = std::max(bound, m.lipschitz(ifs.metric));
  }
  out.analytic = bound;
  return out;
}

ConditionEstimate check_prob_lipschitz(const DiscreteIFS& ifs, std::size_t pairs,
                                       std::uint64_t seed, const SampleBox& box) {
  if (pairs == 0) throw InputError("pair-sample size must be >= 1");
  check_box(box, ifs.dim());
  ConditionEstimate out;
  for (std::size_t k = 0; k < pairs; ++k) {
    const auto [x, y] = sample_pair(box, seed, k);
    const double rho = distance(ifs.metric, x, y);
    if (rho == 0.0) continue;
    const double s = (ifs.probs(x) - ifs.probs(y)).cwiseAbs().sum();
    out.observed = std::max(out.observed, s / rho);
    ++out.pairs;
  }
  out.analytic = ifs.probs.lipschitz_bound(ifs.metric);
  return out;
}

ConditionEstimate check_flow_expansion(const FlowSpec& flow, const MetricSpec& metric,
                                       std::size_t pairs, double t_max, std::uint64_t seed,
                                       const SampleBox& box) {
  if (pairs == 0) throw InputError("pair-sample size must be >= 1");
  if (!(t_max > 0.0)) throw InputError("t_max must be > 0");
  check_box(box, flow.lambda.size());
  ConditionEstimate out;
  out.observed = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < pairs; ++k) {
    const auto [x, y] = sample_pair(box, seed, k);
    const double rho = distance(metric, x, y);
    if (rho == 0.0) continue;
    KeyedStream s(seed, k, 1);
    const double t = t_max * (1.0 - s.uniform());
    const double moved = distance(metric, flow(t, x), flow(t, y));
    if (moved == 0.0) continue;
    out.observed = std::max(out.observed, std::log(moved / rho) / t);
    ++out.pairs;
  }
  if (out.pairs == 0) out.observed = 0.0;
  const double kappa = flow.kappa();
  out.analytic = metric.kind == MetricKind::truncated ? std::max(kappa, 0.0) : kappa;
  return out;
}

SpectralGapCheck check_spectral_gap_condition(double r, double kappa, double gamma) {
  if (!(gamma > 0.0)) throw InputError("gamma must be > 0");
  if (!std::isfinite(r) || !std::isfinite(kappa)) throw InputError("r and kappa must be finite");
  const double v = r + kappa / gamma;
  return {v, v < 1.0};
}

double PowerModulus::operator()(double t) const { return c * std::pow(t, q); }
double OmegaModulus::operator()(double t) const { return a * std::pow(t, beta); }

ModuliReport check_moduli_pair(const ModulusPair& pair, const std::vector<double>& grid,
                               std::size_t terms) {
  const auto& r = pair.r;
  const auto& w = pair.omega;
  if (!(r.c > 0.0) || !(r.q > 0.0) || !std::isfinite(r.c) || !std::isfinite(r.q)) {
    throw InputError("unsupported modulus form: r(t) = c t^q needs c > 0, q > 0");
  }
  if (!(w.a > 0.0) || !(w.beta > 0.0 && w.beta <= 1.0)) {
    throw InputError("unsupported modulus form: omega(t) = a t^beta needs a > 0, beta in (0, 1]");
  }
  if (grid.empty()) throw InputError("moduli check needs a nonempty t grid");
  ModuliReport out;
  out.grid = grid;
  out.concave = r.q <= 1.0 && w.beta <= 1.0;
  bool ok = true;
  for (double t : grid) {
    if (!(t > 0.0)) throw InputError("moduli grid points must be > 0");
    if (r(t) >= t) {
      out.witnesses.push_back(t);
      ok = false;
    }
    double u = t, sum = 0.0;
    for (std::size_t n = 1; n <= terms; ++n) {
      u = r(u);
      sum += w(u);
    }
    double tail = std::numeric_limits<double>::infinity();
    if (r.q >= 1.0) {
      // For q >= 1 the ratio r(u)/u = c u^{q-1} does not increase along the
      // orbit, so the tail is dominated by a geometric series.
      const double ratio = r.c * std::pow(u, r.q - 1.0);
      if (ratio < 1.0) {
        const double rb = std::pow(ratio, w.beta);
        tail = w.a * std::pow(ratio * u, w.beta) / (1.0 - rb);
      }
    }
    out.partial_sums.push_back(sum);
    out.tail_bounds.push_back(tail);
    if (!(tail < 1e-9)) ok = false;
  }
  out.pass = ok;
  return out;
}

}  // namespace feller
