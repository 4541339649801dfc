#include "feller/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "feller/parallel.hpp"
#include "feller/transport.hpp"

namespace feller {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::supported: return "supported";
    case Verdict::refuted: return "refuted";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

Json point_json(const Point& p) { return std::vector<double>(p.data(), p.data() + p.size()); }

Json sampler_json(const SamplerOptions& s) {
  return {{"particles", s.particles}, {"seed", s.seed}};
}

double radical_inverse(std::size_t i, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

MarkovSystem as_markov(const Model& model) {
  if (const auto* ifs = std::get_if<DiscreteIFS>(&model)) return *ifs;
  return std::get<JumpFlowSystem>(model);
}

std::vector<Eigen::Index> chain_ball(const Chain& chain, const Point& z, double eps,
                                     const std::vector<Eigen::Index>& explicit_states) {
  if (!explicit_states.empty()) {
    state_mask(chain.states(), explicit_states);  // range check
    return explicit_states;
  }
  return chain.states_in_ball(Ball(z, eps), MetricSpec::euclidean());
}

std::vector<Eigen::Index> all_states_if_empty(const Chain& chain, std::vector<Eigen::Index> states) {
  if (states.empty()) {
    for (Eigen::Index i = 0; i < chain.states(); ++i) states.push_back(i);
  }
  for (auto s : states) {
    if (s < 0 || s >= chain.states()) throw InputError("start state index out of range");
  }
  return states;
}

// Mean of f over the particle cloud; values are computed in parallel and
// summed in index order so the result does not depend on the thread count.
template <typename F>
double cloud_mean(const ParticleCloud& cloud, unsigned threads, F&& f) {
  Eigen::VectorXd values(static_cast<Eigen::Index>(cloud.count()));
  const auto& X = cloud.positions();
  parallel_for(cloud.count(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) values(j) = f(X.col(static_cast<Eigen::Index>(j)));
  });
  double s = 0.0;
  for (Eigen::Index j = 0; j < values.size(); ++j) s += values(j);
  return s / static_cast<double>(values.size());
}

// Ball masses per step (1..n) for the outer ball B(z, eps) and the inner ball
// B(z, eps/2), one row per start.
struct BallTraces {
  std::vector<Json> start_labels;
  std::vector<std::vector<double>> outer;
  std::vector<std::vector<double>> inner;
  bool exact = false;
  std::vector<Eigen::Index> ball_states;
  std::vector<Eigen::Index> start_states;
};

BallTraces ball_traces(const Model& model, const LowerBoundParams& p) {
  if (p.horizon == 0 || p.window == 0 || p.window > p.horizon) {
    throw InputError("lower bound: need horizon >= window >= 1");
  }
  if (!(p.eps > 0.0)) throw InputError("lower bound: eps must be positive");
  BallTraces out;
  if (const auto* chain = std::get_if<Chain>(&model)) {
    out.exact = true;
    out.ball_states = chain_ball(*chain, p.z, p.eps, p.ball_states);
    out.start_states = all_states_if_empty(*chain, p.start_states);
    const Eigen::VectorXd mask = state_mask(chain->states(), out.ball_states);
    const Eigen::MatrixXd PT = chain->matrix().transpose();
    for (auto s : out.start_states) {
      out.start_labels.push_back(s);
      std::vector<double> masses;
      Eigen::VectorXd cur = chain->basis(s);
      for (std::size_t m = 1; m <= p.horizon; ++m) {
        cur = PT * cur;
        masses.push_back(cur.dot(mask));
      }
      out.outer.push_back(std::move(masses));
    }
    return out;
  }
  const MarkovSystem system = as_markov(model);
  const MetricSpec& metric = system_metric(system);
  if (p.starts.empty()) throw InputError("lower bound: no start points");
  if (p.z.size() != system_dim(system)) throw InputError("lower bound: centre dimension mismatch");
  const Ball outer(p.z, p.eps), inner(p.z, p.eps / 2.0);
  const auto& s = p.sampler;
  for (const auto& x0 : p.starts) {
    out.start_labels.push_back(point_json(x0));
    ParticleCloud cloud(x0, s.particles);
    std::vector<double> mo, mi;
    for (std::size_t m = 1; m <= p.horizon; ++m) {
      cloud.advance(system, m, s.seed, s.threads);
      mo.push_back(cloud_mean(cloud, s.threads, [&](const auto& x) {
        return in_ball(metric, outer, Point(x)) ? 1.0 : 0.0;
      }));
      mi.push_back(cloud_mean(cloud, s.threads, [&](const auto& x) {
        return in_ball(metric, inner, Point(x)) ? 1.0 : 0.0;
      }));
    }
    out.outer.push_back(std::move(mo));
    out.inner.push_back(std::move(mi));
  }
  return out;
}

std::vector<std::size_t> checkpoints(std::size_t horizon, std::size_t window) {
  std::vector<std::size_t> c;
  for (std::size_t m = window; m <= horizon; m += window) c.push_back(m);
  return c;
}

// Minimum of series[m-1] over trailing-half checkpoints m.
double trailing_min(const std::vector<double>& series, const std::vector<std::size_t>& cps,
                    std::size_t horizon) {
  double best = std::numeric_limits<double>::infinity();
  for (auto m : cps) {
    if (2 * m >= horizon) best = std::min(best, series[m - 1]);
  }
  return best;
}

std::vector<double> running_average(const std::vector<double>& per_step) {
  std::vector<double> out(per_step.size());
  double s = 0.0;
  for (std::size_t i = 0; i < per_step.size(); ++i) out[i] = (s += per_step[i]) / static_cast<double>(i + 1);
  return out;
}

double binomial_se(double p, std::size_t n) {
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

Json lower_bound_parameters(const LowerBoundParams& p, const Model& model) {
  Json j = {{"eps", p.eps}, {"horizon", p.horizon}, {"window", p.window}};
  if (std::holds_alternative<Chain>(model)) {
    j["ball_states"] = p.ball_states;
    j["start_states"] = p.start_states;
    if (p.z.size() > 0) j["z"] = point_json(p.z);
  } else {
    j["z"] = point_json(p.z);
    Json starts = Json::array();
    for (const auto& x : p.starts) starts.push_back(point_json(x));
    j["starts"] = starts;
    j["sampler"] = sampler_json(p.sampler);
  }
  return j;
}

// Escape certificate applied to every start; empty when none applies.
std::optional<Json> escape_witness(const Model& model, const LowerBoundParams& p) {
  const auto* ifs = std::get_if<DiscreteIFS>(&model);
  if (!ifs) return std::nullopt;
  auto cert = escape_certificate(*ifs);
  if (!cert) return std::nullopt;
  Json steps = Json::array();
  const Ball ball(p.z, p.eps);
  for (const auto& x : p.starts) steps.push_back(escape_step(*cert, ifs->metric, ball, x));
  return Json{{"direction", point_json(cert->direction)}, {"drift", cert->drift}, {"last_visit_step", steps}};
}

}  // namespace

std::vector<TestFunction> default_dictionary(const Point& lo, const Point& hi, const MetricSpec& metric) {
  if (lo.size() != hi.size() || lo.size() == 0) throw InputError("dictionary box dimension mismatch");
  require_finite(lo, "dictionary box");
  require_finite(hi, "dictionary box");
  if ((hi.array() < lo.array()).any()) throw InputError("dictionary box needs lo <= hi");
  static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  const Eigen::Index d = lo.size();
  if (d > 12) throw InputError("default dictionary supports d <= 12");
  const double scale = std::max(0.25 * distance(metric, lo, hi), 1e-3);
  std::vector<TestFunction> out;
  for (std::size_t i = 0; i < 16; ++i) {
    Point c(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      const double u = d == 1 ? static_cast<double>(i) / 15.0 : radical_inverse(i + 1, primes[k]);
      c(k) = lo(k) + u * (hi(k) - lo(k));
    }
    out.push_back(TestFunction::tent(c, scale, metric));
  }
  for (Eigen::Index k = 0; k < d; ++k) out.push_back(TestFunction::clipped_coordinate(k, -1.0, 1.0));
  return out;
}

std::vector<Eigen::VectorXd> chain_dictionary(const Chain& chain, const std::vector<TestFunction>& dictionary) {
  std::vector<Eigen::VectorXd> out;
  const Eigen::Index n = chain.states();
  if (!chain.embedding().empty() && !dictionary.empty()) {
    for (const auto& f : dictionary) {
      Eigen::VectorXd v(n);
      for (Eigen::Index i = 0; i < n; ++i) v(i) = f(chain.embedding()[i]);
      out.push_back(std::move(v));
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) out.push_back(Eigen::VectorXd::Unit(n, i));
  }
  return out;
}

std::optional<EscapeCertificate> escape_certificate(const DiscreteIFS& ifs) {
  const Eigen::Index d = ifs.dim();
  std::vector<Point> drifts;
  for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
    if (ifs.probs.is_constant() && ifs.probs.constant_weights()(static_cast<Eigen::Index>(i)) <= 0.0) continue;
    if (ifs.maps[i].A != Eigen::MatrixXd::Identity(d, d)) return std::nullopt;
    drifts.push_back(ifs.maps[i].b);
  }
  if (drifts.empty()) return std::nullopt;
  // Candidate directions: each drift and their sum, normalized.
  std::vector<Point> candidates = drifts;
  Point sum = Point::Zero(d);
  for (const auto& b : drifts) sum += b;
  candidates.push_back(sum);
  std::optional<EscapeCertificate> best;
  for (auto u : candidates) {
    const double norm = u.norm();
    if (!(norm > 0.0)) continue;
    u /= norm;
    double drift = std::numeric_limits<double>::infinity();
    for (const auto& b : drifts) drift = std::min(drift, u.dot(b));
    if (drift > 0.0 && (!best || drift > best->drift)) best = EscapeCertificate{u, drift};
  }
  return best;
}

std::size_t escape_step(const EscapeCertificate& cert, const MetricSpec& metric, const Ball& ball,
                        const Point& x) {
  // |u.(y - z)| <= c rho(y, z) with c = 1 (euclidean) or ||u||_1 (chebyshev).
  double c = 1.0;
  if (metric.kind == MetricKind::chebyshev) c = cert.direction.lpNorm<1>();
  if (metric.kind == MetricKind::truncated && ball.radius > metric.cap) {
    throw InputError("escape step: a ball wider than the metric cap is the whole space");
  }
  const double reach = cert.direction.dot(ball.center) + c * ball.radius - cert.direction.dot(x);
  if (reach < 0.0) return 0;
  return static_cast<std::size_t>(std::floor(reach / cert.drift));
}

CriterionReport lower_bound_mass_estimate(const Model& model, const LowerBoundParams& p) {
  CriterionReport r;
  r.name = "lower_bound_mass";
  r.parameters = lower_bound_parameters(p, model);
  const BallTraces tr = ball_traces(model, p);
  const auto cps = checkpoints(p.horizon, p.window);

  Json per_start = Json::array();
  double worst = std::numeric_limits<double>::infinity();
  bool monotone = true;
  std::vector<double> mins;
  for (std::size_t s = 0; s < tr.outer.size(); ++s) {
    const auto avg = running_average(tr.outer[s]);
    Json cps_json = Json::array();
    for (auto m : cps) cps_json.push_back({{"m", m}, {"frequency", avg[m - 1]}});
    const double mn = trailing_min(avg, cps, p.horizon);
    Json entry = {{"start", tr.start_labels[s]}, {"checkpoints", cps_json}, {"liminf_proxy", mn}};
    if (!tr.inner.empty()) {
      const double inner_mn = trailing_min(running_average(tr.inner[s]), cps, p.horizon);
      entry["liminf_proxy_half_radius"] = inner_mn;
      monotone = monotone && inner_mn <= mn;
    }
    mins.push_back(mn);
    worst = std::min(worst, mn);
    per_start.push_back(std::move(entry));
  }
  r.estimates["per_start"] = per_start;
  r.estimates["min_over_starts"] = worst;

  if (tr.exact) {
    const Chain& chain = std::get<Chain>(model);
    const ChainStructure st = analyze_chain(chain);
    bool all_positive = true;
    Json limits = Json::array();
    for (std::size_t s = 0; s < tr.start_states.size(); ++s) {
      const LimitMasses lm = limit_ball_masses(chain, st, chain.basis(tr.start_states[s]), tr.ball_states);
      limits.push_back({{"start", tr.start_states[s]}, {"cesaro_limit", lm.cesaro},
                        {"positive", lm.cesaro_positive_structural}});
      all_positive = all_positive && lm.cesaro_positive_structural;
    }
    r.estimates["exact_limits"] = limits;
    r.estimates["ball_states"] = tr.ball_states;
    r.verdict = all_positive ? Verdict::supported : Verdict::refuted;
    return r;
  }

  r.estimates["monotone_in_eps"] = monotone;
  Json se = Json::array();
  bool supported = true;
  for (double m : mins) {
    const double e = binomial_se(m, p.sampler.particles);
    se.push_back(e);
    supported = supported && m > 3.0 * e;
  }
  r.estimates["standard_error"] = se;
  if (auto w = escape_witness(model, p)) {
    r.estimates["escape"] = *w;
    r.estimates["exact_limit"] = 0.0;
    r.verdict = Verdict::refuted;
    return r;
  }
  r.verdict = supported ? Verdict::supported : Verdict::inconclusive;
  r.caveats.push_back("Monte Carlo estimate: liminf proxied by the trailing-half checkpoint minimum");
  return r;
}

CriterionReport stability_lower_bound_estimate(const Model& model, const LowerBoundParams& p) {
  CriterionReport r;
  r.name = "stability_lower_bound";
  r.parameters = lower_bound_parameters(p, model);
  r.caveats.push_back("inf over the start grid approximates inf over X only on the explored region");
  const BallTraces tr = ball_traces(model, p);
  const auto cps = checkpoints(p.horizon, p.window);

  Json per_start = Json::array();
  double inf = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (std::size_t s = 0; s < tr.outer.size(); ++s) {
    Json cps_json = Json::array();
    for (auto m : cps) cps_json.push_back({{"m", m}, {"mass", tr.outer[s][m - 1]}});
    const double mn = trailing_min(tr.outer[s], cps, p.horizon);
    Json entry = {{"start", tr.start_labels[s]}, {"checkpoints", cps_json}, {"liminf_proxy", mn}};
    if (!tr.inner.empty()) {
      const double inner_mn = trailing_min(tr.inner[s], cps, p.horizon);
      entry["liminf_proxy_half_radius"] = inner_mn;
      monotone = monotone && inner_mn <= mn;
    }
    inf = std::min(inf, mn);
    per_start.push_back(std::move(entry));
  }
  r.estimates["per_start"] = per_start;
  r.estimates["inf_over_grid"] = inf;

  if (tr.exact) {
    const Chain& chain = std::get<Chain>(model);
    const ChainStructure st = analyze_chain(chain);
    double exact_inf = std::numeric_limits<double>::infinity();
    Json limits = Json::array();
    for (auto s : tr.start_states) {
      const LimitMasses lm = limit_ball_masses(chain, st, chain.basis(s), tr.ball_states);
      limits.push_back({{"start", s}, {"liminf", lm.liminf}, {"limsup", lm.limsup}});
      exact_inf = std::min(exact_inf, lm.liminf);
    }
    r.estimates["exact_limits"] = limits;
    r.estimates["exact_inf_liminf"] = exact_inf;
    r.estimates["ball_states"] = tr.ball_states;
    r.verdict = exact_inf > 1e-12 ? Verdict::supported : Verdict::refuted;
    return r;
  }

  r.estimates["monotone_in_eps"] = monotone;
  const double se = binomial_se(inf, p.sampler.particles);
  r.estimates["standard_error"] = se;
  if (auto w = escape_witness(model, p)) {
    r.estimates["escape"] = *w;
    r.estimates["exact_inf_liminf"] = 0.0;
    r.verdict = Verdict::refuted;
    return r;
  }
  r.verdict = inf > 3.0 * se ? Verdict::supported : Verdict::inconclusive;
  r.caveats.push_back("Monte Carlo estimate: liminf proxied by the trailing-half checkpoint minimum");
  return r;
}

namespace {

// values[n][f] = <f, P^n delta_x> for n = 0..N.
std::vector<std::vector<double>> orbit_integrals(const MarkovSystem& system, const Point& x,
                                                 const std::vector<TestFunction>& dict, std::size_t N,
                                                 EvalMode mode, const SamplerOptions& s,
                                                 const PrunePolicy& policy) {
  std::vector<std::vector<double>> out;
  if (mode == EvalMode::exact) {
    const auto* ifs = std::get_if<DiscreteIFS>(&system);
    if (!ifs) throw InputError("exact mode needs a discrete IFS");
    const EvolutionTrace tr = evolve_exact(*ifs, dirac(x), N, policy);
    for (const auto& m : tr.measures) {
      std::vector<double> row;
      for (const auto& f : dict) row.push_back(integrate(m, f));
      out.push_back(std::move(row));
    }
    return out;
  }
  ParticleCloud cloud(x, s.particles);
  for (std::size_t n = 0; n <= N; ++n) {
    if (n > 0) cloud.advance(system, n, s.seed, s.threads);
    std::vector<double> row;
    for (const auto& f : dict) row.push_back(cloud_mean(cloud, s.threads, [&](const auto& y) { return f(y); }));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

CriterionReport e_property_probe(const MarkovSystem& system, const std::vector<TestFunction>& dict,
                                 const EPropertyParams& p) {
  if (dict.empty()) throw InputError("e-property probe: empty dictionary");
  if (p.radii.empty()) throw InputError("e-property probe: no radii");
  for (std::size_t i = 0; i < p.radii.size(); ++i) {
    if (!(p.radii[i] > 0.0) || (i > 0 && !(p.radii[i] < p.radii[i - 1]))) {
      throw InputError("e-property probe: radii must be positive and strictly decreasing");
    }
  }
  if (p.x.size() != system_dim(system)) throw InputError("e-property probe: point dimension mismatch");
  CriterionReport r;
  r.name = "e_property";
  r.parameters = {{"x", point_json(p.x)}, {"radii", p.radii}, {"horizon", p.horizon},
                  {"mode", p.mode == EvalMode::exact ? "exact" : "sampler"}};
  if (p.mode == EvalMode::sampler) r.parameters["sampler"] = sampler_json(p.sampler);

  // Each f is rescaled into the Fortet-Mourier unit ball (|f| <= 1, Lip <= 1).
  std::vector<double> scale(dict.size(), 1.0);
  bool unscaled = false;
  for (std::size_t f = 0; f < dict.size(); ++f) {
    if (const auto lip = dict[f].lipschitz()) scale[f] = 1.0 / std::max(1.0, *lip);
    else unscaled = true;
  }
  const auto base = orbit_integrals(system, p.x, dict, p.horizon, p.mode, p.sampler, p.policy);
  std::vector<double> M;
  Json by_n = Json::array();
  for (double rad : p.radii) {
    Point y = p.x;
    y(0) += rad;
    const auto probe = orbit_integrals(system, y, dict, p.horizon, p.mode, p.sampler, p.policy);
    double m = 0.0;
    std::vector<double> per_n;
    for (std::size_t n = 0; n <= p.horizon; ++n) {
      double mn = 0.0;
      for (std::size_t f = 0; f < dict.size(); ++f) mn = std::max(mn, scale[f] * std::abs(probe[n][f] - base[n][f]));
      per_n.push_back(mn);
      m = std::max(m, mn);
    }
    by_n.push_back(per_n);
    M.push_back(m);
  }
  bool monotone = true;  // radii decrease, so M should too
  for (std::size_t i = 1; i < M.size(); ++i) monotone = monotone && M[i] <= M[i - 1];
  r.estimates["modulus"] = M;
  r.estimates["modulus_by_step"] = by_n;
  r.estimates["monotone_in_r"] = monotone;
  const double noise = p.mode == EvalMode::exact ? 1e-12 : 3.0 / std::sqrt(static_cast<double>(p.sampler.particles));
  r.estimates["noise_floor"] = noise;
  const bool shrinking = M.back() <= 0.5 * M.front() + noise;
  const bool flat = *std::max_element(M.begin(), M.end()) <= noise;
  r.verdict = monotone && (shrinking || flat) ? Verdict::supported : Verdict::inconclusive;
  r.caveats.push_back("equicontinuity checked only on the dictionary and the probed radii");
  if (unscaled) r.caveats.push_back("functions without a Lipschitz bound enter unscaled");
  if (p.mode == EvalMode::sampler) r.caveats.push_back("P^n phi estimated with common random numbers");
  return r;
}

CriterionReport cauchy_diagnostic(const Model& model, const std::vector<TestFunction>& dict,
                                  const CauchyParams& p) {
  if (p.grid.size() < 2) throw InputError("Cauchy diagnostic: grid needs >= 2 entries");
  for (std::size_t i = 0; i < p.grid.size(); ++i) {
    if (p.grid[i] == 0 || (i > 0 && p.grid[i] <= p.grid[i - 1])) {
      throw InputError("Cauchy diagnostic: grid must be increasing and positive");
    }
  }
  const std::size_t N = 2 * p.grid.back();
  CriterionReport r;
  r.name = "cauchy";
  r.parameters = {{"grid", p.grid}};

  // a[k][f] = <f, P^k delta_z>, k = 1..N (a[0] unused)
  std::vector<std::vector<double>> a(N + 1);
  if (const auto* chain = std::get_if<Chain>(&model)) {
    r.parameters["z_state"] = p.z_state;
    r.parameters["mode"] = "chain";
    const auto dv = chain_dictionary(*chain, dict);
    const Eigen::MatrixXd PT = chain->matrix().transpose();
    Eigen::VectorXd cur = chain->basis(p.z_state);
    for (std::size_t k = 1; k <= N; ++k) {
      cur = PT * cur;
      for (const auto& v : dv) a[k].push_back(v.dot(cur));
    }
  } else {
    if (dict.empty()) throw InputError("Cauchy diagnostic: empty dictionary");
    const MarkovSystem system = as_markov(model);
    if (p.z.size() != system_dim(system)) throw InputError("Cauchy diagnostic: point dimension mismatch");
    r.parameters["z"] = point_json(p.z);
    if (p.mode == EvalMode::exact) {
      const auto* ifs = std::get_if<DiscreteIFS>(&model);
      if (!ifs) throw InputError("exact mode needs a discrete IFS");
      r.parameters["mode"] = "exact";
      r.parameters["full_depth"] = p.full_depth;
      r.parameters["merge_radius"] = p.merge_radius;
      FiniteMeasure m = dirac(p.z);
      double slack = 0.0;
      for (std::size_t k = 1; k <= N; ++k) {
        m = dual_step_exact(*ifs, m);
        if (k > p.full_depth && p.merge_radius > 0.0) {
          PruneResult pr = prune(m, 0.0, p.merge_radius, ifs->metric);
          slack += pr.transport_slack;
          m = std::move(pr.measure);
        }
        for (const auto& f : dict) a[k].push_back(integrate(m, f));
      }
      r.estimates["merge_transport_slack"] = slack;
      r.caveats.push_back("exact evolution merged atoms within merge_radius after full_depth steps");
    } else {
      r.parameters["mode"] = "sampler";
      r.parameters["sampler"] = sampler_json(p.sampler);
      const auto& s = p.sampler;
      ParticleCloud cloud(p.z, s.particles);
      for (std::size_t k = 1; k <= N; ++k) {
        cloud.advance(system, k, s.seed, s.threads);
        for (const auto& f : dict) a[k].push_back(cloud_mean(cloud, s.threads, [&](const auto& y) { return f(y); }));
      }
      r.caveats.push_back("Monte Carlo estimate of the Cesaro integrals");
    }
  }

  const std::size_t F = a[1].size();
  std::vector<std::vector<double>> S(N + 1, std::vector<double>(F, 0.0));
  for (std::size_t k = 1; k <= N; ++k) {
    for (std::size_t f = 0; f < F; ++f) S[k][f] = S[k - 1][f] + a[k][f];
  }
  auto D = [&](std::size_t n, std::size_t m) {
    double d = 0.0;
    for (std::size_t f = 0; f < F; ++f) {
      d = std::max(d, std::abs(S[n][f] / static_cast<double>(n) - S[m][f] / static_cast<double>(m)));
    }
    return d;
  };
  Json table = Json::array();
  for (auto n : p.grid) {
    std::vector<double> row;
    for (auto m : p.grid) row.push_back(D(n, m));
    table.push_back(row);
  }
  std::vector<double> doubling;
  for (auto n : p.grid) doubling.push_back(D(n, 2 * n));
  bool decreasing = true;
  for (std::size_t i = 1; i < doubling.size(); ++i) decreasing = decreasing && doubling[i] <= doubling[i - 1] + 1e-15;
  r.estimates["D"] = table;
  r.estimates["D_n_2n"] = doubling;
  r.estimates["decreasing"] = decreasing;
  r.verdict = decreasing ? Verdict::supported : Verdict::inconclusive;
  return r;
}

double invariant_residual(const DiscreteIFS& ifs, const FiniteMeasure& candidate) {
  return fm_distance(dual_step_exact(ifs, candidate), candidate, ifs.metric).value;
}

CriterionReport uniform_compact_convergence(const Model& model, const std::vector<TestFunction>& dict,
                                            const UniformParams& p) {
  CriterionReport r;
  r.name = "uniform_compact";
  r.parameters = {{"horizon", p.horizon}, {"tolerance", p.tolerance}};
  std::vector<double> sup(p.horizon + 1, 0.0);

  if (const auto* chain = std::get_if<Chain>(&model)) {
    r.parameters["mode"] = "chain";
    const auto grid = all_states_if_empty(*chain, p.grid_states);
    r.parameters["grid_states"] = grid;
    const Eigen::VectorXd pi = p.mu_star_chain ? *p.mu_star_chain : chain_stationary(*chain);
    require_distribution(*chain, pi);
    for (auto v : chain_dictionary(*chain, dict)) {
      const double target = v.dot(pi);
      for (std::size_t n = 0; n <= p.horizon; ++n) {
        if (n > 0) v = chain->matrix() * v;
        for (auto x : grid) sup[n] = std::max(sup[n], std::abs(v(x) - target));
      }
    }
  } else {
    if (dict.empty()) throw InputError("uniform convergence: empty dictionary");
    if (p.grid.empty()) throw InputError("uniform convergence: empty grid");
    if (!p.mu_star) throw InputError("uniform convergence: mu_star is required");
    const MarkovSystem system = as_markov(model);
    r.parameters["mode"] = p.mode == EvalMode::exact ? "exact" : "sampler";
    Json grid = Json::array();
    for (const auto& x : p.grid) grid.push_back(point_json(x));
    r.parameters["grid"] = grid;
    if (p.mode == EvalMode::sampler) r.parameters["sampler"] = sampler_json(p.sampler);
    std::vector<double> targets;
    for (const auto& f : dict) targets.push_back(integrate(*p.mu_star, f));
    for (const auto& x : p.grid) {
      if (x.size() != system_dim(system)) throw InputError("uniform convergence: grid dimension mismatch");
      const auto vals = orbit_integrals(system, x, dict, p.horizon, p.mode, p.sampler, p.policy);
      for (std::size_t n = 0; n <= p.horizon; ++n) {
        for (std::size_t f = 0; f < dict.size(); ++f) sup[n] = std::max(sup[n], std::abs(vals[n][f] - targets[f]));
      }
    }
    if (p.mode == EvalMode::sampler) r.caveats.push_back("Monte Carlo estimate of P^n phi");
  }
  r.estimates["sup_deviation"] = sup;
  r.estimates["final"] = sup.back();
  r.verdict = sup.back() <= p.tolerance ? Verdict::supported : Verdict::inconclusive;
  r.caveats.push_back("uniformity checked on the supplied grid only");
  return r;
}

}  // namespace feller
