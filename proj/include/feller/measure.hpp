#pragma once

#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "feller/errors.hpp"
#include "feller/geometry.hpp"

namespace feller {

// Points closer than this (coordinate-wise) are the same atom.
inline constexpr double kAtomTolerance = 1e-12;
// Allowed deviation of the total mass from 1 at construction.
inline constexpr double kMassTolerance = 1e-9;
// Drift beyond this is repaired by dividing through by the current sum.
inline constexpr double kRenormalizeThreshold = 1e-12;

// Finite-support probability measure on R^d. Atoms are the columns of a d x n
// coordinate matrix, kept in lexicographic order with duplicates merged and
// zero weights dropped. An "empty" measure (no atoms) is only produced by
// restrict_normalize for a zero-mass ball and never passes validate().
class FiniteMeasure {
 public:
  FiniteMeasure() = default;

  // Validates, merges duplicate points and repairs normalization drift.
  // Throws InputError on negative/non-finite weights, non-finite points or a
  // total mass outside 1 +- kMassTolerance.
  static FiniteMeasure from_atoms(Eigen::MatrixXd points, Eigen::VectorXd weights);
  static FiniteMeasure from_list(const std::vector<std::pair<Point, double>>& atoms);
  static FiniteMeasure empty(Eigen::Index dim);

  // Canonicalizes without checking the total mass. Used by operations whose
  // output mass is known to be 1 up to rounding; renormalizes when the drift
  // exceeds kRenormalizeThreshold.
  static FiniteMeasure from_unnormalized(Eigen::MatrixXd points, Eigen::VectorXd weights);

  Eigen::Index dim() const { return points_.rows(); }
  Eigen::Index size() const { return weights_.size(); }
  bool is_empty() const { return weights_.size() == 0; }

  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Point point(Eigen::Index i) const { return points_.col(i); }
  double weight(Eigen::Index i) const { return weights_(i); }
  double total_mass() const { return weights_.sum(); }

  // Throws InputError if any invariant is violated.
  void validate() const;

 private:
  FiniteMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights)
      : points_(std::move(points)), weights_(std::move(weights)) {}

  static FiniteMeasure canonical(Eigen::MatrixXd points, Eigen::VectorXd weights);

  Eigen::MatrixXd points_;
  Eigen::VectorXd weights_;
};

// Bounded test function. Every variant satisfies |f| <= 1.
class TestFunction {
 public:
  // x -> max(0, 1 - rho(x, center)/scale)
  struct Tent {
    Point center;
    double scale;
    MetricSpec metric;
  };
  // x -> clamp(x_index, lo, hi) with -1 <= lo <= hi <= 1
  struct ClippedCoordinate {
    Eigen::Index index;
    double lo, hi;
  };
  // x -> clamp(sum_k coeffs[k] * x_index^k, -clip, clip) with 0 < clip <= 1
  struct ClippedPolynomial {
    Eigen::Index index;
    std::vector<double> coeffs;
    double clip;
  };

  static TestFunction tent(Point center, double scale,
                           MetricSpec metric = MetricSpec::euclidean());
  static TestFunction clipped_coordinate(Eigen::Index index, double lo, double hi);
  static TestFunction clipped_polynomial(Eigen::Index index, std::vector<double> coeffs,
                                         double clip = 1.0);
  static TestFunction constant(double value);

  template <typename Derived>
  double operator()(const Eigen::MatrixBase<Derived>& x) const {
    return std::visit([&](const auto& f) { return eval(f, x); }, kind_);
  }

  // Lipschitz constant w.r.t. the function's metric; empty when it is not
  // available in closed form (polynomials of degree >= 2).
  std::optional<double> lipschitz() const;

  const auto& kind() const { return kind_; }

 private:
  using Kind = std::variant<Tent, ClippedCoordinate, ClippedPolynomial>;
  explicit TestFunction(Kind k) : kind_(std::move(k)) {}

  template <typename Derived>
  static double eval(const Tent& t, const Eigen::MatrixBase<Derived>& x) {
    const double r = distance_unchecked(t.metric, x, t.center);
    return r < t.scale ? 1.0 - r / t.scale : 0.0;
  }
  template <typename Derived>
  static double eval(const ClippedCoordinate& c, const Eigen::MatrixBase<Derived>& x) {
    const double v = x(c.index);
    return v < c.lo ? c.lo : (v > c.hi ? c.hi : v);
  }
  template <typename Derived>
  static double eval(const ClippedPolynomial& p, const Eigen::MatrixBase<Derived>& x) {
    const double t = x(p.index);
    double v = 0.0;
    for (auto it = p.coeffs.rbegin(); it != p.coeffs.rend(); ++it) v = v * t + *it;
    return v < -p.clip ? -p.clip : (v > p.clip ? p.clip : v);
  }

  Kind kind_;
};

FiniteMeasure dirac(const Point& p);

// Convex combination sum_j coefs[j] * measures[j]. Coefficients must be
// nonnegative and sum to 1 within kMassTolerance.
FiniteMeasure mixture(std::span<const double> coefs, std::span<const FiniteMeasure> measures);
FiniteMeasure mixture(const std::vector<std::pair<double, FiniteMeasure>>& terms);

// Image measure under `map`, which takes an Eigen column and returns a Point.
// Total mass is carried over unchanged; colliding images are merged.
template <typename Map>
FiniteMeasure pushforward(const FiniteMeasure& m, Map&& map) {
  Eigen::MatrixXd images(m.dim(), m.size());
  for (Eigen::Index j = 0; j < m.size(); ++j) {
    Point y = map(Point(m.points().col(j)));
    if (y.size() != m.dim()) throw InputError("pushforward map changed the dimension");
    if (!y.allFinite()) throw NumericError("pushforward map produced a non-finite point");
    images.col(j) = y;
  }
  return FiniteMeasure::from_unnormalized(std::move(images), m.weights());
}

struct Restriction {
  double mass;                // m(ball)
  FiniteMeasure conditioned;  // m(. cap ball) / m(ball); empty when mass == 0
};

Restriction restrict_normalize(const FiniteMeasure& m, const Ball& ball, const MetricSpec& metric);

// Sum over the union support of |m1({x}) - m2({x})|; lies in [0, 2].
double tv_distance(const FiniteMeasure& m1, const FiniteMeasure& m2);

double integrate(const FiniteMeasure& m, const TestFunction& f);

// Weighted mean of the atoms.
Point mean(const FiniteMeasure& m);

struct PruneResult {
  FiniteMeasure measure;
  double dropped_mass = 0.0;     // mass of atoms removed below the floor
  double transport_slack = 0.0;  // sum of weight * displacement from merging

  // tv(input, output) <= 2 * dropped_mass when no merging happened.
  double tv_bound() const { return 2.0 * dropped_mass; }
  // fm(input, output) <= transport_slack + 2 * dropped_mass.
  double fm_bound() const { return transport_slack + 2.0 * dropped_mass; }
};

// Greedy merge (heaviest atom first, ties broken lexicographically) of atoms
// within `merge_radius` of a seed into their mass-weighted centroid, then
// removal of atoms lighter than `mass_floor` and renormalization.
// Throws InputError for mass_floor outside [0, 1e-6] or merge_radius < 0, and
// DegenerateError if nothing survives.
PruneResult prune(const FiniteMeasure& m, double mass_floor, double merge_radius,
                  const MetricSpec& metric);

// Union support of two measures with both weight vectors aligned to it.
struct AlignedPair {
  Eigen::MatrixXd points;
  Eigen::VectorXd w1;
  Eigen::VectorXd w2;
};
AlignedPair align(const FiniteMeasure& m1, const FiniteMeasure& m2);

// Largest atom-wise weight difference over the union support.
double max_weight_difference(const FiniteMeasure& m1, const FiniteMeasure& m2);

}  // namespace feller
