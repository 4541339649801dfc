#include "feller/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "feller/semigroup.hpp"

namespace feller {

SigmaSchedule sigma_schedule(double alpha, double epsilon, std::size_t K) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("sigma schedule: alpha must lie in (0, 1)");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("sigma schedule: epsilon must lie in (0, 1)");
  if (K == 0) throw InputError("sigma schedule: K must be >= 1");
  SigmaSchedule s{alpha, epsilon, K, {}};
  s.sigmas.reserve(K);
  double sigma = alpha;
  for (std::size_t j = 1; j <= K; ++j) {
    sigma *= 1.0 - std::pow(epsilon, 1.0 / static_cast<double>(j));
    s.sigmas.push_back(sigma);
  }
  return s;
}

double lemma_ineq_margin(double alpha, std::size_t k, double epsilon) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("lemma margin: alpha must lie in (0, 1)");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("lemma margin: epsilon must lie in (0, 1)");
  if (k == 0) throw DomainError("lemma margin: k must be >= 1");
  const double kd = static_cast<double>(k);
  const double x = std::pow(epsilon, 1.0 / kd);
  // (1 - x)^k - 1, accurate when x is tiny
  const double E = std::expm1(kd * std::log1p(-x));
  const double den = (1.0 - alpha) - alpha * E;
  if (!(den > 0.0)) throw DomainError("lemma margin: nonpositive denominator");
  // num/den - 1 = alpha (E - eps) / den, with num = 1 - alpha(1 + eps)
  return alpha * (E - epsilon) / den + std::pow(epsilon, 1.0 / (kd + 1.0));
}

LemmaThreshold lemma_threshold(double alpha, std::size_t k, double floor, double ceiling,
                               std::size_t scan_points, std::size_t bisection_steps) {
  if (!(floor > 0.0 && floor < ceiling && ceiling < 1.0)) {
    throw InputError("lemma threshold: need 0 < floor < ceiling < 1");
  }
  if (scan_points < 2) throw InputError("lemma threshold: need at least two scan points");
  if (!(lemma_ineq_margin(alpha, k, floor) > 0.0)) {
    throw DomainError("lemma threshold: margin is not positive at the search floor");
  }
  const double lf = std::log(floor), lc = std::log(ceiling);
  const double step = (lc - lf) / static_cast<double>(scan_points - 1);
  double lo = lf;
  for (std::size_t i = 1; i < scan_points; ++i) {
    const double l = i + 1 == scan_points ? lc : lf + step * static_cast<double>(i);
    if (lemma_ineq_margin(alpha, k, std::exp(l)) > 0.0) {
      lo = l;
      continue;
    }
    double hi = l;
    for (std::size_t b = 0; b < bisection_steps; ++b) {
      const double mid = 0.5 * (lo + hi);
      if (lemma_ineq_margin(alpha, k, std::exp(mid)) > 0.0) lo = mid;
      else hi = mid;
    }
    return {std::exp(lo), false, bisection_steps};
  }
  return {ceiling, true, 0};
}

// ---- splits ------------------------------------------------------------------

MeasureSplit ball_split(const FiniteMeasure& m, const Ball& ball, double sigma,
                        const MetricSpec& metric) {
  if (!(sigma >= 0.0 && sigma < 1.0)) throw InputError("ball split: sigma must lie in [0, 1)");
  m.validate();
  Restriction r = restrict_normalize(m, ball, metric);
  if (!(r.mass > sigma)) throw InadmissibleSplit(0, sigma, r.mass);
  const double keep = 1.0 - sigma / r.mass;
  Eigen::VectorXd w = m.weights();
  for (Eigen::Index j = 0; j < m.size(); ++j) {
    if (in_ball(metric, ball, m.point(j))) w(j) *= keep;
    w(j) /= 1.0 - sigma;
  }
  return {std::move(r.conditioned), FiniteMeasure::from_unnormalized(m.points(), w), r.mass};
}

VectorSplit ball_split(const Eigen::VectorXd& dist, const Eigen::VectorXd& ball, double sigma,
                       std::size_t step) {
  if (!(sigma >= 0.0 && sigma < 1.0)) throw InputError("ball split: sigma must lie in [0, 1)");
  if (dist.size() != ball.size()) throw InputError("ball split: mask length != distribution length");
  const Eigen::VectorXd inside = dist.cwiseProduct(ball);
  const double mass = inside.sum();
  if (!(mass > sigma)) throw InadmissibleSplit(step, sigma, mass);
  VectorSplit out;
  out.ball_mass = mass;
  out.nu = inside / mass;
  // in-ball entries scale by (1 - sigma/mass), which keeps them nonnegative
  out.remainder = (dist - inside + inside * (1.0 - sigma / mass)) / (1.0 - sigma);
  return out;
}

const char* to_string(TermTag tag) { return tag == TermTag::nu ? "nu" : "mu-remainder"; }

namespace {

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& P, std::size_t t) {
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(P.rows(), P.cols());
  Eigen::MatrixXd base = P;
  while (t > 0) {
    if (t & 1u) result = result * base;
    t >>= 1;
    if (t > 0) base = base * base;
  }
  return result;
}

// Generic split-and-propagate construction. ops[k] acts on column
// distributions; required[k] is the mass split off at step k + 1.
DecompositionCertificate decompose(const std::vector<Eigen::MatrixXd>& ops,
                                   const Eigen::VectorXd& start, const Eigen::VectorXd& mask,
                                   const std::vector<double>& required) {
  const std::size_t K = ops.size();
  DecompositionCertificate cert;
  cert.target = start;
  for (const auto& op : ops) cert.target = op * cert.target;

  Eigen::VectorXd mu = start;
  std::vector<Eigen::VectorXd> nus;
  for (std::size_t k = 0; k < K; ++k) {
    VectorSplit s = ball_split(ops[k] * mu, mask, required[k], k + 1);
    cert.split_masses.push_back(s.ball_mass);
    cert.required_masses.push_back(required[k]);
    nus.push_back(std::move(s.nu));
    mu = std::move(s.remainder);
  }

  double carried = 1.0;  // prod_{s<j} (1 - required_s)
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(start.size());
  for (std::size_t j = 0; j < K; ++j) {
    DecompositionTerm term;
    term.coefficient = required[j] * carried;
    term.base = nus[j];
    term.propagated = nus[j];
    for (std::size_t s = j + 1; s < K; ++s) term.propagated = ops[s] * term.propagated;
    term.tag = TermTag::nu;
    term.step = j + 1;
    carried *= 1.0 - required[j];
    cert.ball_mass_witnesses.push_back(nus[j].dot(mask));
    cert.max_outside_mass =
        std::max(cert.max_outside_mass, nus[j].dot(Eigen::VectorXd::Ones(mask.size()) - mask));
    sum += term.coefficient * term.propagated;
    cert.coefficient_sum += term.coefficient;
    cert.terms.push_back(std::move(term));
  }
  DecompositionTerm rem{carried, mu, mu, TermTag::mu_remainder, K};
  sum += rem.coefficient * rem.propagated;
  cert.coefficient_sum += rem.coefficient;
  cert.terms.push_back(std::move(rem));
  cert.reconstruction_residual = (sum - cert.target).cwiseAbs().sum();
  return cert;
}

void require_times(const std::vector<std::size_t>& times) {
  if (times.empty()) throw InputError("decomposition needs at least one time");
  for (auto t : times) {
    if (t == 0) throw InputError("decomposition times must be >= 1");
  }
}

}  // namespace

DecompositionCertificate chain_decomposition(const Chain& chain, const Eigen::VectorXd& start,
                                             const std::vector<Eigen::Index>& ball_states,
                                             const SigmaSchedule& schedule,
                                             const std::vector<std::size_t>& times) {
  require_distribution(chain, start);
  require_times(times);
  if (times.size() > schedule.K) throw InputError("chain decomposition: more times than schedule entries");
  const Eigen::VectorXd mask = state_mask(chain.states(), ball_states);
  std::vector<Eigen::MatrixXd> ops;
  for (auto t : times) ops.push_back(cesaro_matrix(chain, t).transpose());
  std::vector<double> required(schedule.sigmas.begin(), schedule.sigmas.begin() + times.size());
  return decompose(ops, start, mask, required);
}

TelescopingPair telescoping_decomposition(const Chain& chain, const Eigen::VectorXd& mu1,
                                          const Eigen::VectorXd& mu2,
                                          const std::vector<Eigen::Index>& ball_states,
                                          double alpha, const std::vector<std::size_t>& times) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("telescoping decomposition: alpha must lie in (0, 1)");
  require_distribution(chain, mu1);
  require_distribution(chain, mu2);
  require_times(times);
  const Eigen::VectorXd mask = state_mask(chain.states(), ball_states);
  std::vector<Eigen::MatrixXd> ops;
  for (auto t : times) ops.push_back(matrix_power(chain.matrix(), t).transpose());
  std::vector<double> required(times.size(), alpha);
  return {decompose(ops, mu1, mask, required), decompose(ops, mu2, mask, required)};
}

std::vector<std::size_t> telescoping_times(const Chain& chain, const Eigen::VectorXd& mu1,
                                           const Eigen::VectorXd& mu2,
                                           const std::vector<Eigen::Index>& ball_states,
                                           double alpha, std::size_t k, std::size_t t_max) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("telescoping times: alpha must lie in (0, 1)");
  require_distribution(chain, mu1);
  require_distribution(chain, mu2);
  const Eigen::VectorXd mask = state_mask(chain.states(), ball_states);
  const Eigen::MatrixXd PT = chain.matrix().transpose();
  Eigen::VectorXd a = mu1, b = mu2;
  std::vector<std::size_t> times;
  for (std::size_t step = 1; step <= k; ++step) {
    Eigen::VectorXd ca = a, cb = b;
    double best = -1.0;
    std::size_t found = 0;
    for (std::size_t t = 1; t <= t_max; ++t) {
      ca = PT * ca;
      cb = PT * cb;
      const double m = std::min(ca.dot(mask), cb.dot(mask));
      best = std::max(best, m);
      if (m > alpha) {
        found = t;
        break;
      }
    }
    if (found == 0) throw InadmissibleSplit(step, alpha, best);
    times.push_back(found);
    a = ball_split(ca, mask, alpha, step).remainder;
    b = ball_split(cb, mask, alpha, step).remainder;
  }
  return times;
}

CesaroTimes doubling_cesaro_times(const Chain& chain, std::size_t K, double gap_threshold,
                                  std::size_t t_start, std::size_t t_max) {
  if (K == 0 || t_start == 0) throw InputError("Cesaro times: K and t_start must be >= 1");
  if (!(gap_threshold > 0.0)) throw InputError("Cesaro times: gap threshold must be positive");
  CesaroTimes out;
  out.times.push_back(t_start);
  out.gaps.push_back(0.0);
  while (out.times.size() < K) {
    std::size_t T = out.times.back() * 2;
    for (;; T *= 2) {
      if (T > t_max) {
        throw ResourceError("Cesaro times: no time up to " + std::to_string(t_max) +
                            " brings the composed gap below the threshold");
      }
      double worst = 0.0;
      for (std::size_t j = 0; j < out.times.size(); ++j) {
        std::vector<std::size_t> tail(out.times.begin() + static_cast<std::ptrdiff_t>(j), out.times.end());
        worst = std::max(worst, composed_cesaro_gap(chain, tail, T));
      }
      if (worst < gap_threshold) {
        out.times.push_back(T);
        out.gaps.push_back(worst);
        break;
      }
    }
  }
  return out;
}

CouplingBoundReport coupling_bound_check(const Chain& chain, const Eigen::VectorXd& mu1,
                                         const Eigen::VectorXd& mu2, double alpha,
                                         const std::vector<std::size_t>& times,
                                         const std::vector<Eigen::Index>& ball_states,
                                         const std::vector<Eigen::VectorXd>& dictionary) {
  const Eigen::Index n = chain.states();
  for (const auto& phi : dictionary) {
    if (phi.size() != n) throw InputError("coupling bound: dictionary function has the wrong length");
    if (!phi.allFinite() || phi.cwiseAbs().maxCoeff() > 1.0) {
      throw InputError("coupling bound: dictionary functions must be bounded by 1");
    }
  }
  if (ball_states.empty()) throw InputError("coupling bound: empty ball");
  CouplingBoundReport report;
  report.certificates = telescoping_decomposition(chain, mu1, mu2, ball_states, alpha, times);

  std::size_t total = 0;
  for (auto t : times) total += t;

  // The proof bounds |<P^s phi, nu_1 - nu_2>| for s in [0, total] by the
  // oscillation of P^s phi over the ball.
  report.epsilon_phi = 0.0;
  const Eigen::MatrixXd& P = chain.matrix();
  for (const auto& phi : dictionary) {
    Eigen::VectorXd v = phi;
    for (std::size_t s = 0; s <= total; ++s) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (auto i : ball_states) {
        lo = std::min(lo, v(i));
        hi = std::max(hi, v(i));
      }
      report.epsilon_phi = std::max(report.epsilon_phi, hi - lo);
      if (s < total) v = P * v;
    }
  }

  const Eigen::MatrixXd PT = P.transpose();
  Eigen::VectorXd a = mu1, b = mu2;
  std::size_t t = 0;
  report.pass = true;
  for (std::size_t k = 1; k <= times.size(); ++k) {
    for (std::size_t s = 0; s < times[k - 1]; ++s) {
      a = PT * a;
      b = PT * b;
    }
    t += times[k - 1];
    double lhs = 0.0;
    for (const auto& phi : dictionary) lhs = std::max(lhs, std::abs(phi.dot(a) - phi.dot(b)));
    const double rhs = report.epsilon_phi + 2.0 * std::pow(1.0 - alpha, static_cast<double>(k));
    const bool ok = lhs <= rhs + 1e-12;
    report.rows.push_back({k, t, lhs, rhs, ok});
    report.pass = report.pass && ok;
  }
  return report;
}

}  // namespace feller
