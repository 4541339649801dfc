#include "feller/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace feller {

namespace {

bool lex_less(const Eigen::MatrixXd& pts, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index k = 0; k < pts.rows(); ++k) {
    const double x = pts(k, a), y = pts(k, b);
    if (x < y) return true;
    if (y < x) return false;
  }
  return false;
}

// -1, 0, +1 with coordinates within kAtomTolerance treated as equal.
template <typename A, typename B>
int tolerant_compare(const Eigen::MatrixBase<A>& p, const Eigen::MatrixBase<B>& q) {
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double diff = p(k) - q(k);
    if (diff <= -kAtomTolerance) return -1;
    if (diff >= kAtomTolerance) return 1;
  }
  return 0;
}

void check_weights(const Eigen::VectorXd& w) {
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w(i)) || w(i) < 0.0) {
      throw InputError("atom weight " + std::to_string(i) + " is negative or non-finite");
    }
  }
}

void renormalize_drift(Eigen::VectorXd& w) {
  const double s = w.sum();
  if (s > 0.0 && std::abs(s - 1.0) > kRenormalizeThreshold) w /= s;
}

}  // namespace

FiniteMeasure FiniteMeasure::canonical(Eigen::MatrixXd points, Eigen::VectorXd weights) {
  const Eigen::Index n = weights.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  bool sorted = true;
  for (Eigen::Index i = 1; i < n && sorted; ++i) sorted = !lex_less(points, i, i - 1);
  if (!sorted) {
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return lex_less(points, a, b); });
  }

  std::vector<Eigen::Index> heads;
  std::vector<double> merged;
  heads.reserve(n);
  merged.reserve(n);
  for (Eigen::Index i : order) {
    if (!heads.empty() &&
        (points.col(i) - points.col(heads.back())).cwiseAbs().maxCoeff() < kAtomTolerance) {
      merged.back() += weights(i);
    } else {
      heads.push_back(i);
      merged.push_back(weights(i));
    }
  }

  Eigen::Index kept = 0;
  for (double w : merged) kept += (w > 0.0);
  Eigen::MatrixXd out_pts(points.rows(), kept);
  Eigen::VectorXd out_w(kept);
  Eigen::Index c = 0;
  for (std::size_t g = 0; g < heads.size(); ++g) {
    if (merged[g] <= 0.0) continue;
    out_pts.col(c) = points.col(heads[g]);
    out_w(c) = merged[g];
    ++c;
  }
  return FiniteMeasure(std::move(out_pts), std::move(out_w));
}

FiniteMeasure FiniteMeasure::from_atoms(Eigen::MatrixXd points, Eigen::VectorXd weights) {
  if (points.cols() != weights.size()) throw InputError("points/weights count mismatch");
  if (points.rows() == 0) throw InputError("measure dimension must be >= 1");
  if (weights.size() == 0) throw InputError("probability measure needs at least one atom");
  if (!points.allFinite()) throw InputError("atom coordinates must be finite");
  check_weights(weights);
  const double s = weights.sum();
  if (std::abs(s - 1.0) > kMassTolerance) {
    throw InputError("atom weights sum to " + std::to_string(s) + ", expected 1");
  }
  renormalize_drift(weights);
  return canonical(std::move(points), std::move(weights));
}

FiniteMeasure FiniteMeasure::from_list(const std::vector<std::pair<Point, double>>& atoms) {
  if (atoms.empty()) throw InputError("probability measure needs at least one atom");
  const Eigen::Index d = atoms.front().first.size();
  Eigen::MatrixXd pts(d, static_cast<Eigen::Index>(atoms.size()));
  Eigen::VectorXd w(static_cast<Eigen::Index>(atoms.size()));
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    if (atoms[j].first.size() != d) throw InputError("atoms of differing dimension");
    pts.col(static_cast<Eigen::Index>(j)) = atoms[j].first;
    w(static_cast<Eigen::Index>(j)) = atoms[j].second;
  }
  return from_atoms(std::move(pts), std::move(w));
}

FiniteMeasure FiniteMeasure::empty(Eigen::Index dim) {
  return FiniteMeasure(Eigen::MatrixXd(dim, 0), Eigen::VectorXd(0));
}

FiniteMeasure FiniteMeasure::from_unnormalized(Eigen::MatrixXd points, Eigen::VectorXd weights) {
  if (points.cols() != weights.size()) throw InputError("points/weights count mismatch");
  if (!points.allFinite()) throw NumericError("non-finite atom coordinates");
  check_weights(weights);
  renormalize_drift(weights);
  return canonical(std::move(points), std::move(weights));
}

void FiniteMeasure::validate() const {
  if (is_empty()) throw InputError("empty measure is not a probability measure");
  if (points_.cols() != weights_.size()) throw InputError("points/weights count mismatch");
  if (!points_.allFinite()) throw InputError("non-finite atom coordinates");
  check_weights(weights_);
  if (std::abs(weights_.sum() - 1.0) > kMassTolerance) {
    throw InputError("weights do not sum to 1");
  }
  for (Eigen::Index i = 1; i < size(); ++i) {
    if (!lex_less(points_, i - 1, i)) throw InputError("atoms not in canonical order");
    if ((points_.col(i) - points_.col(i - 1)).cwiseAbs().maxCoeff() < kAtomTolerance) {
      throw InputError("duplicate support points");
    }
  }
}

TestFunction TestFunction::tent(Point center, double scale, MetricSpec metric) {
  require_finite(center, "tent center");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("tent scale must be > 0");
  metric.validate();
  return TestFunction(Tent{std::move(center), scale, metric});
}

TestFunction TestFunction::clipped_coordinate(Eigen::Index index, double lo, double hi) {
  if (index < 0) throw InputError("coordinate index must be >= 0");
  if (!(lo >= -1.0 && lo <= hi && hi <= 1.0)) {
    throw InputError("clipped coordinate needs -1 <= lo <= hi <= 1");
  }
  return TestFunction(ClippedCoordinate{index, lo, hi});
}

TestFunction TestFunction::clipped_polynomial(Eigen::Index index, std::vector<double> coeffs,
                                              double clip) {
  if (index < 0) throw InputError("coordinate index must be >= 0");
  if (!(clip > 0.0 && clip <= 1.0)) throw InputError("polynomial clip must lie in (0, 1]");
  for (double c : coeffs) {
    if (!std::isfinite(c)) throw InputError("polynomial coefficients must be finite");
  }
  return TestFunction(ClippedPolynomial{index, std::move(coeffs), clip});
}

TestFunction TestFunction::constant(double value) {
  if (!(std::abs(value) <= 1.0)) throw InputError("constant test function must satisfy |c| <= 1");
  return clipped_polynomial(0, {value}, 1.0);
}

std::optional<double> TestFunction::lipschitz() const {
  struct Visitor {
    std::optional<double> operator()(const Tent& t) const { return 1.0 / t.scale; }
    std::optional<double> operator()(const ClippedCoordinate&) const { return 1.0; }
    std::optional<double> operator()(const ClippedPolynomial& p) const {
      std::size_t degree = 0;
      for (std::size_t k = 0; k < p.coeffs.size(); ++k) {
        if (p.coeffs[k] != 0.0) degree = k;
      }
      if (degree == 0) return 0.0;
      if (degree == 1) return std::abs(p.coeffs[1]);
      return std::nullopt;
    }
  };
  return std::visit(Visitor{}, kind_);
}

FiniteMeasure dirac(const Point& p) {
  require_finite(p);
  return FiniteMeasure::from_atoms(Eigen::MatrixXd(p), Eigen::VectorXd::Ones(1));
}

FiniteMeasure mixture(std::span<const double> coefs, std::span<const FiniteMeasure> measures) {
  if (coefs.size() != measures.size()) throw InputError("mixture: coefficient count mismatch");
  if (coefs.empty()) throw InputError("mixture of zero terms");
  double s = 0.0;
  Eigen::Index total = 0;
  const Eigen::Index d = measures.front().dim();
  for (std::size_t j = 0; j < coefs.size(); ++j) {
    if (!(coefs[j] >= 0.0) || !std::isfinite(coefs[j])) {
      throw InputError("mixture coefficients must be nonnegative");
    }
    if (measures[j].dim() != d) throw InputError("mixture of measures of differing dimension");
    s += coefs[j];
    if (coefs[j] > 0.0) total += measures[j].size();
  }
  if (std::abs(s - 1.0) > kMassTolerance) {
    throw InputError("mixture coefficients sum to " + std::to_string(s) + ", expected 1");
  }
  Eigen::MatrixXd pts(d, total);
  Eigen::VectorXd w(total);
  Eigen::Index c = 0;
  for (std::size_t j = 0; j < coefs.size(); ++j) {
    if (coefs[j] == 0.0) continue;
    const auto& m = measures[j];
    pts.middleCols(c, m.size()) = m.points();
    w.segment(c, m.size()) = coefs[j] * m.weights();
    c += m.size();
  }
  return FiniteMeasure::from_unnormalized(std::move(pts), std::move(w));
}

FiniteMeasure mixture(const std::vector<std::pair<double, FiniteMeasure>>& terms) {
  std::vector<double> coefs;
  std::vector<FiniteMeasure> ms;
  coefs.reserve(terms.size());
  ms.reserve(terms.size());
  for (const auto& [c, m] : terms) {
    coefs.push_back(c);
    ms.push_back(m);
  }
  return mixture(coefs, ms);
}

Restriction restrict_normalize(const FiniteMeasure& m, const Ball& ball, const MetricSpec& metric) {
  if (ball.center.size() != m.dim()) throw InputError("ball/measure dimension mismatch");
  std::vector<Eigen::Index> inside;
  double mass = 0.0;
  for (Eigen::Index j = 0; j < m.size(); ++j) {
    if (distance_unchecked(metric, m.points().col(j), ball.center) < ball.radius) {
      inside.push_back(j);
      mass += m.weight(j);
    }
  }
  if (inside.empty() || mass <= 0.0) return {0.0, FiniteMeasure::empty(m.dim())};
  Eigen::MatrixXd pts(m.dim(), static_cast<Eigen::Index>(inside.size()));
  Eigen::VectorXd w(static_cast<Eigen::Index>(inside.size()));
  for (std::size_t k = 0; k < inside.size(); ++k) {
    pts.col(static_cast<Eigen::Index>(k)) = m.points().col(inside[k]);
    w(static_cast<Eigen::Index>(k)) = m.weight(inside[k]) / mass;
  }
  return {mass, FiniteMeasure::from_unnormalized(std::move(pts), std::move(w))};
}

AlignedPair align(const FiniteMeasure& m1, const FiniteMeasure& m2) {
  if (m1.dim() != m2.dim()) throw InputError("measures of differing dimension");
  const Eigen::Index n1 = m1.size(), n2 = m2.size();
  Eigen::MatrixXd pts(m1.dim(), n1 + n2);
  Eigen::VectorXd w1 = Eigen::VectorXd::Zero(n1 + n2), w2 = Eigen::VectorXd::Zero(n1 + n2);
  Eigen::Index i = 0, j = 0, c = 0;
  while (i < n1 || j < n2) {
    int cmp;
    if (i == n1) {
      cmp = 1;
    } else if (j == n2) {
      cmp = -1;
    } else {
      cmp = tolerant_compare(m1.points().col(i), m2.points().col(j));
    }
    if (cmp <= 0) {
      pts.col(c) = m1.points().col(i);
      w1(c) = m1.weight(i++);
      if (cmp == 0) w2(c) = m2.weight(j++);
    } else {
      pts.col(c) = m2.points().col(j);
      w2(c) = m2.weight(j++);
    }
    ++c;
  }
  return {pts.leftCols(c), w1.head(c), w2.head(c)};
}

double tv_distance(const FiniteMeasure& m1, const FiniteMeasure& m2) {
  const auto a = align(m1, m2);
  return (a.w1 - a.w2).cwiseAbs().sum();
}

double max_weight_difference(const FiniteMeasure& m1, const FiniteMeasure& m2) {
  const auto a = align(m1, m2);
  return a.w1.size() == 0 ? 0.0 : (a.w1 - a.w2).cwiseAbs().maxCoeff();
}

double integrate(const FiniteMeasure& m, const TestFunction& f) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < m.size(); ++j) s += m.weight(j) * f(m.points().col(j));
  return s;
}

Point mean(const FiniteMeasure& m) { return m.points() * m.weights(); }

PruneResult prune(const FiniteMeasure& m, double mass_floor, double merge_radius,
                  const MetricSpec& metric) {
  if (!(mass_floor >= 0.0 && mass_floor <= 1e-6)) {
    throw InputError("prune mass_floor must lie in [0, 1e-6]");
  }
  if (!(merge_radius >= 0.0) || !std::isfinite(merge_radius)) {
    throw InputError("prune merge_radius must be >= 0");
  }
  PruneResult out;
  const Eigen::Index n = m.size();
  Eigen::MatrixXd pts = m.points();
  Eigen::VectorXd w = m.weights();

  if (merge_radius > 0.0 && n > 1) {
    // Canonical order sorts by the first coordinate, and every supported metric
    // dominates |dx_1| below its cap, so candidates lie in a contiguous window.
    const bool window_ok = metric.kind != MetricKind::truncated || merge_radius <= metric.cap;
    std::vector<Eigen::Index> by_weight(n);
    std::iota(by_weight.begin(), by_weight.end(), Eigen::Index{0});
    std::stable_sort(by_weight.begin(), by_weight.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return w(a) > w(b); });
    std::vector<char> taken(n, 0);
    std::vector<double> first(n);
    for (Eigen::Index j = 0; j < n; ++j) first[j] = m.points()(0, j);
    Eigen::MatrixXd merged_pts(m.dim(), n);
    Eigen::VectorXd merged_w(n);
    Eigen::Index groups = 0;
    std::vector<Eigen::Index> members;
    for (Eigen::Index seed : by_weight) {
      if (taken[seed]) continue;
      Eigen::Index lo = 0, hi = n;
      if (window_ok) {
        const double x0 = first[seed];
        lo = std::lower_bound(first.begin(), first.end(), x0 - merge_radius) - first.begin();
        hi = std::upper_bound(first.begin(), first.end(), x0 + merge_radius) - first.begin();
      }
      members.clear();
      for (Eigen::Index j = lo; j < hi; ++j) {
        if (taken[j]) continue;
        if (j == seed ||
            distance_unchecked(metric, m.points().col(j), m.points().col(seed)) < merge_radius) {
          members.push_back(j);
        }
      }
      double mass = 0.0;
      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(m.dim());
      for (Eigen::Index j : members) {
        taken[j] = 1;
        mass += w(j);
        centroid += w(j) * m.points().col(j);
      }
      centroid /= mass;
      for (Eigen::Index j : members) {
        out.transport_slack += w(j) * distance_unchecked(metric, m.points().col(j), centroid);
      }
      merged_pts.col(groups) = centroid;
      merged_w(groups) = mass;
      ++groups;
    }
    pts = merged_pts.leftCols(groups);
    w = merged_w.head(groups);
  }

  double kept = 0.0;
  Eigen::Index survivors = 0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (w(j) < mass_floor) {
      out.dropped_mass += w(j);
    } else {
      kept += w(j);
      ++survivors;
    }
  }
  if (survivors == 0 || !(kept > 0.0)) {
    throw DegenerateError("prune removed every atom (total mass below the floor)");
  }
  Eigen::MatrixXd keep_pts(m.dim(), survivors);
  Eigen::VectorXd keep_w(survivors);
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (w(j) < mass_floor) continue;
    keep_pts.col(c) = pts.col(j);
    keep_w(c++) = out.dropped_mass > 0.0 ? w(j) / kept : w(j);
  }
  out.measure = FiniteMeasure::from_unnormalized(std::move(keep_pts), std::move(keep_w));
  return out;
}

}  // namespace feller
