#include "feller/geometry.hpp"

#include <cmath>
#include <string>

#include "feller/errors.hpp"

namespace feller {

MetricSpec MetricSpec::truncated(double cap) {
  MetricSpec m{MetricKind::truncated, cap};
  m.validate();
  return m;
}

void MetricSpec::validate() const {
  if (kind == MetricKind::truncated && !(cap > 0.0 && std::isfinite(cap))) {
    throw InputError("truncated metric requires a finite cap > 0");
  }
}

Ball::Ball(Point c, double r) : center(std::move(c)), radius(r) {
  require_finite(center, "ball center");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw InputError("ball radius must be positive and finite");
  }
}

void require_finite(const Point& p, const char* what) {
  if (p.size() == 0) throw InputError(std::string(what) + " has dimension 0");
  if (!p.allFinite()) throw InputError(std::string(what) + " has non-finite coordinates");
}

double distance(const MetricSpec& metric, const Point& p, const Point& q) {
  if (p.size() != q.size()) {
    throw InputError("dimension mismatch: " + std::to_string(p.size()) + " vs " +
                     std::to_string(q.size()));
  }
  require_finite(p);
  require_finite(q);
  return distance_unchecked(metric, p, q);
}

bool in_ball(const MetricSpec& metric, const Ball& ball, const Point& p) {
  return distance(metric, ball.center, p) < ball.radius;
}

}  // namespace feller
