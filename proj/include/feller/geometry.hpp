#pragma once

#include <Eigen/Dense>

namespace feller {

// A point of the state space R^d.
using Point = Eigen::VectorXd;

enum class MetricKind { euclidean, chebyshev, truncated };

// The metric rho on R^d. `truncated` is min(euclidean, cap).
struct MetricSpec {
  MetricKind kind = MetricKind::euclidean;
  double cap = 0.0;

  static MetricSpec euclidean() { return {MetricKind::euclidean, 0.0}; }
  static MetricSpec chebyshev() { return {MetricKind::chebyshev, 0.0}; }
  static MetricSpec truncated(double cap);

  // Throws InputError when cap <= 0 for a truncated metric.
  void validate() const;
};

// Open ball B(center, radius).
struct Ball {
  Point center;
  double radius;

  Ball(Point center, double radius);
};

// Throws InputError if any coordinate is NaN or infinite.
void require_finite(const Point& p, const char* what = "point");

double distance(const MetricSpec& metric, const Point& p, const Point& q);

// Column-oriented variant used by the measure code: `p` and `q` are columns
// (or any vector expressions) of equal length. No dimension check.
template <typename A, typename B>
double distance_unchecked(const MetricSpec& metric, const Eigen::MatrixBase<A>& p,
                          const Eigen::MatrixBase<B>& q) {
  switch (metric.kind) {
    case MetricKind::chebyshev:
      return (p - q).cwiseAbs().maxCoeff();
    case MetricKind::truncated: {
      const double d = (p - q).norm();
      return d < metric.cap ? d : metric.cap;
    }
    case MetricKind::euclidean:
    default:
      return (p - q).norm();
  }
}

// Strict inequality: the boundary sphere is outside.
bool in_ball(const MetricSpec& metric, const Ball& ball, const Point& p);

}  // namespace feller
