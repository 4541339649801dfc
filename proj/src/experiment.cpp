#include "feller/experiment.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "feller/coupling.hpp"
#include "feller/serialize.hpp"

namespace feller {

namespace {

constexpr Command kAllCommands[] = {Command::run,           Command::simulate,       Command::estimate_invariant,
                                    Command::check_conditions, Command::check_criteria, Command::couple_verify,
                                    Command::oracle_chain};

bool belongs(const std::string& kind, Command c) {
  switch (c) {
    case Command::run: return true;
    case Command::simulate: return kind == "simulate";
    case Command::estimate_invariant: return kind == "estimate_invariant" || kind == "invariant_residual";
    case Command::check_conditions: return kind == "conditions";
    case Command::check_criteria:
      return kind == "lower_bound" || kind == "stability" || kind == "e_property" || kind == "cauchy" ||
             kind == "uniform_compact" || kind == "invariant_residual";
    case Command::couple_verify: return kind == "couple_verify";
    case Command::oracle_chain: return kind == "oracle_chain";
  }
  return false;
}

std::optional<Json> default_check(Command c, const Model& model) {
  const bool chain = std::holds_alternative<Chain>(model);
  switch (c) {
    case Command::simulate: return Json{{"kind", "simulate"}};
    case Command::estimate_invariant: return Json{{"kind", "estimate_invariant"}};
    case Command::check_conditions:
      if (!chain) return Json{{"kind", "conditions"}};
      return std::nullopt;
    case Command::oracle_chain:
      if (chain) return Json{{"kind", "oracle_chain"}};
      return std::nullopt;
    default: return std::nullopt;
  }
}

Eigen::Index model_dim(const Model& m) {
  if (const auto* ifs = std::get_if<DiscreteIFS>(&m)) return ifs->dim();
  if (const auto* jf = std::get_if<JumpFlowSystem>(&m)) return jf->dim();
  const Chain& c = std::get<Chain>(m);
  return c.embedding().empty() ? 1 : c.embedding().front().size();
}

const MetricSpec& model_metric(const Model& m) {
  static const MetricSpec euclid = MetricSpec::euclidean();
  if (const auto* ifs = std::get_if<DiscreteIFS>(&m)) return ifs->metric;
  if (const auto* jf = std::get_if<JumpFlowSystem>(&m)) return jf->metric;
  return euclid;
}

const Chain& require_chain(const Model& m, const JsonField& where) {
  const auto* c = std::get_if<Chain>(&m);
  if (!c) where.fail("this check needs a chain system");
  return *c;
}

MarkovSystem require_markov(const Model& m, const JsonField& where) {
  if (const auto* ifs = std::get_if<DiscreteIFS>(&m)) return *ifs;
  if (const auto* jf = std::get_if<JumpFlowSystem>(&m)) return *jf;
  where.fail("this check needs an ifs or jumpflow system");
}

const DiscreteIFS& require_ifs(const Model& m, const JsonField& where) {
  const auto* ifs = std::get_if<DiscreteIFS>(&m);
  if (!ifs) where.fail("this check needs an ifs system");
  return *ifs;
}

Point point_from(const JsonField& f, Eigen::Index dim) {
  Point p = f.json().is_number() ? Eigen::VectorXd::Constant(1, f.number()) : f.vector();
  if (p.size() != dim) f.fail("expected a point of dimension " + std::to_string(dim));
  return p;
}

std::vector<Point> points_from(const JsonField& f, Eigen::Index dim) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < f.size(); ++i) out.push_back(point_from(f[i], dim));
  return out;
}

std::vector<Eigen::Index> indices_from(const JsonField& f) {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < f.size(); ++i) out.push_back(static_cast<Eigen::Index>(f[i].unsigned_integer()));
  return out;
}

std::vector<std::size_t> sizes_from(const JsonField& f) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < f.size(); ++i) out.push_back(static_cast<std::size_t>(f[i].unsigned_integer()));
  return out;
}

// A distribution given as an array of weights or as a state index.
Eigen::VectorXd dist_from(const JsonField& f, const Chain& chain) {
  if (f.json().is_number_integer()) {
    const auto s = static_cast<Eigen::Index>(f.unsigned_integer());
    if (s >= chain.states()) f.fail("state index out of range");
    return chain.basis(s);
  }
  Eigen::VectorXd v = f.vector();
  try {
    require_distribution(chain, v);
  } catch (const InputError& e) {
    f.fail(e.what());
  }
  return v;
}

// Either {"atoms": ...} or {"uniform_grid": {"lo", "hi", "count", "offset"}}
// (atoms lo + (j + offset) h, h = (hi - lo) / count, equal weights; d = 1).
FiniteMeasure measure_or_grid(const JsonField& f) {
  if (f.has("uniform_grid")) {
    const JsonField g = f["uniform_grid"];
    const double lo = g["lo"].number(), hi = g["hi"].number(), off = g.number_or("offset", 0.0);
    const auto count = static_cast<Eigen::Index>(g["count"].unsigned_integer());
    if (count == 0 || !(hi > lo)) g.fail("need count >= 1 and hi > lo");
    Eigen::MatrixXd pts(1, count);
    const double h = (hi - lo) / static_cast<double>(count);
    for (Eigen::Index j = 0; j < count; ++j) pts(0, j) = lo + (static_cast<double>(j) + off) * h;
    return FiniteMeasure::from_atoms(std::move(pts), Eigen::VectorXd::Constant(count, 1.0 / static_cast<double>(count)));
  }
  return measure_from_json(f);
}

SamplerOptions sampler_from(const JsonField& p, const ExperimentConfig& cfg) {
  SamplerOptions s;
  s.particles = static_cast<std::size_t>(p.unsigned_or("particles", 10000));
  if (s.particles == 0) p["particles"].fail("must be >= 1");
  s.seed = cfg.seed;
  s.threads = cfg.threads;
  return s;
}

PrunePolicy policy_from(const JsonField& p) {
  PrunePolicy policy;
  if (!p.has("prune")) return policy;
  const JsonField f = p["prune"];
  policy.enabled = f.boolean_or("enabled", true);
  policy.mass_floor = f.number_or("mass_floor", policy.mass_floor);
  policy.merge_radius = f.number_or("merge_radius", policy.merge_radius);
  policy.budget = f.number_or("budget", policy.budget);
  policy.support_cap = static_cast<Eigen::Index>(f.unsigned_or("support_cap", static_cast<std::uint64_t>(policy.support_cap)));
  return policy;
}

EvalMode mode_from(const JsonField& p, EvalMode fallback) {
  if (!p.has("mode")) return fallback;
  const std::string m = p["mode"].string();
  if (m == "exact") return EvalMode::exact;
  if (m == "sampler") return EvalMode::sampler;
  p["mode"].fail("expected 'exact' or 'sampler'");
}

std::vector<TestFunction> dictionary_from(const JsonField& p, const Model& model) {
  const MetricSpec& metric = model_metric(model);
  const Eigen::Index d = model_dim(model);
  if (p.has("dictionary")) {
    const JsonField list = p["dictionary"];
    std::vector<TestFunction> out;
    for (std::size_t i = 0; i < list.size(); ++i) out.push_back(test_function_from_json(list[i], metric));
    return out;
  }
  if (std::holds_alternative<Chain>(model) && std::get<Chain>(model).embedding().empty()) return {};
  Point lo = Point::Constant(d, -1.0), hi = Point::Constant(d, 1.0);
  if (p.has("dictionary_box")) {
    lo = point_from(p["dictionary_box"]["lo"], d);
    hi = point_from(p["dictionary_box"]["hi"], d);
  }
  return default_dictionary(lo, hi, metric);
}

Json verdict_json(const Verdict v) { return to_string(v); }

struct CheckOutcome {
  std::string status;
  Json report;
};

CheckOutcome status_of(const CriterionReport& r) { return {to_string(r.verdict), to_json(r)}; }

// ---- individual checks --------------------------------------------------------

LowerBoundParams lower_bound_params(const JsonField& p, const ExperimentConfig& cfg) {
  LowerBoundParams lp;
  const Eigen::Index d = model_dim(cfg.model);
  const bool chain = std::holds_alternative<Chain>(cfg.model);
  if (p.has("z")) lp.z = point_from(p["z"], d);
  else if (!chain) p["z"].fail("missing field");
  lp.eps = p.number_or("eps", 0.1);
  if (p.has("starts")) lp.starts = points_from(p["starts"], d);
  else if (!chain) lp.starts = {lp.z};
  if (p.has("start_states")) lp.start_states = indices_from(p["start_states"]);
  if (p.has("ball_states")) lp.ball_states = indices_from(p["ball_states"]);
  if (chain && lp.ball_states.empty() && std::get<Chain>(cfg.model).embedding().empty()) {
    p["ball_states"].fail("a chain without embedding needs explicit ball states");
  }
  lp.horizon = static_cast<std::size_t>(p.unsigned_or("horizon", 1000));
  lp.window = static_cast<std::size_t>(p.unsigned_or("window", 50));
  lp.sampler = sampler_from(p, cfg);
  return lp;
}

CheckOutcome run_conditions(const JsonField& p, const ExperimentConfig& cfg) {
  const MarkovSystem sys = require_markov(cfg.model, p);
  const Eigen::Index d = model_dim(cfg.model);
  const auto pairs = static_cast<std::size_t>(p.unsigned_or("pairs", 10000));
  SampleBox box = SampleBox::cube(d, -1.0, 1.0);
  if (p.has("box")) box = SampleBox{point_from(p["box"]["lo"], d), point_from(p["box"]["hi"], d)};
  const DiscreteIFS ifs = std::holds_alternative<DiscreteIFS>(sys)
                              ? std::get<DiscreteIFS>(sys)
                              : DiscreteIFS(std::get<JumpFlowSystem>(sys).maps, std::get<JumpFlowSystem>(sys).probs,
                                            std::get<JumpFlowSystem>(sys).metric);
  Json est;
  std::vector<Verdict> verdicts;
  const ConditionEstimate r = check_avg_contraction(ifs, pairs, cfg.seed, box);
  est["avg_contraction"] = to_json(r);
  Verdict vr = r.analytic && *r.analytic < 1.0 ? Verdict::supported
               : r.observed >= 1.0             ? Verdict::refuted
                                               : Verdict::inconclusive;
  est["avg_contraction"]["verdict"] = verdict_json(vr);
  verdicts.push_back(vr);
  const ConditionEstimate a = check_prob_lipschitz(ifs, pairs, cfg.seed, box);
  est["prob_lipschitz"] = to_json(a);
  std::vector<std::string> caveats;
  if (const auto* jf = std::get_if<JumpFlowSystem>(&sys)) {
    const double t_max = p.number_or("t_max", 5.0);
    const ConditionEstimate k = check_flow_expansion(jf->flow, jf->metric, pairs, t_max, cfg.seed, box);
    est["flow_expansion"] = to_json(k);
    const double kappa = std::max(jf->flow.kappa(), 0.0);
    const SpectralGapCheck g = check_spectral_gap_condition(r.value(), kappa, jf->gamma);
    est["spectral_gap"] = {{"r", r.value()}, {"kappa", kappa}, {"gamma", jf->gamma}, {"value", g.value}, {"pass", g.pass}};
    verdicts.push_back(g.pass ? (r.analytic ? Verdict::supported : Verdict::inconclusive) : Verdict::refuted);
    if (kappa > 0.0) caveats.push_back("compact global attractor of the semi-flow is not verified for expansive flows");
  }
  if (p.has("moduli")) {
    const JsonField m = p["moduli"];
    const ModulusPair pair{{m["r"]["c"].number(), m["r"]["q"].number()},
                           {m["omega"]["a"].number(), m["omega"]["beta"].number()}};
    std::vector<double> grid = m.has("grid") ? m["grid"].numbers() : std::vector<double>{0.1, 0.25, 0.5, 0.75, 1.0};
    try {
      const ModuliReport mr = check_moduli_pair(pair, grid, static_cast<std::size_t>(m.unsigned_or("terms", 200)));
      est["moduli"] = to_json(mr);
      verdicts.push_back(mr.pass ? Verdict::supported : Verdict::refuted);
    } catch (const InputError& e) {
      m.fail(e.what());
    }
  }
  Verdict overall = Verdict::supported;
  for (auto v : verdicts) {
    if (v == Verdict::refuted) overall = Verdict::refuted;
    else if (v == Verdict::inconclusive && overall == Verdict::supported) overall = Verdict::inconclusive;
  }
  Json report = {{"name", "conditions"}, {"verdict", to_string(overall)}, {"estimates", est},
                 {"parameters", {{"pairs", pairs}, {"box", {{"lo", to_json(box.lo)}, {"hi", to_json(box.hi)}}}}},
                 {"caveats", caveats}};
  return {to_string(overall), report};
}

CheckOutcome run_simulate(const JsonField& p, const ExperimentConfig& cfg) {
  if (const auto* chain = std::get_if<Chain>(&cfg.model)) {
    const auto steps = static_cast<std::size_t>(p.unsigned_or("steps", 10));
    Eigen::VectorXd dist = p.has("start") ? dist_from(p["start"], *chain) : chain->basis(0);
    Json rows = Json::array();
    for (std::size_t k = 0; k <= steps; ++k) {
      if (k > 0) dist = chain_dual_step(*chain, dist);
      rows.push_back({{"step", k}, {"distribution", std::vector<double>(dist.data(), dist.data() + dist.size())}});
    }
    return {"completed", {{"name", "simulate"}, {"estimates", {{"trace", rows}}}, {"parameters", {{"steps", steps}}}}};
  }
  const MarkovSystem sys = require_markov(cfg.model, p);
  const Eigen::Index d = model_dim(cfg.model);
  const auto steps = static_cast<std::size_t>(p.unsigned_or("steps", 20));
  const std::string mode = p.string_or("mode", "particles");
  StartSpec start = Point(Point::Zero(d));
  if (p.has("start_measure")) start = measure_or_grid(p["start_measure"]);
  else if (p.has("start")) start = point_from(p["start"], d);
  EvolutionTrace trace;
  Json params = {{"steps", steps}, {"mode", mode}};
  if (mode == "exact") {
    const DiscreteIFS& ifs = require_ifs(cfg.model, p);
    const FiniteMeasure m0 = std::holds_alternative<Point>(start) ? dirac(std::get<Point>(start)) : std::get<FiniteMeasure>(start);
    trace = evolve_exact(ifs, m0, steps, policy_from(p));
  } else if (mode == "particles") {
    ParticleOptions o;
    const SamplerOptions s = sampler_from(p, cfg);
    o.count = s.particles;
    o.seed = s.seed;
    o.threads = s.threads;
    o.record_stride = static_cast<std::size_t>(p.unsigned_or("record_stride", 1));
    trace = evolve_particles(sys, start, steps, o);
    params["particles"] = o.count;
    params["seed"] = o.seed;
  } else {
    p["mode"].fail("expected 'exact' or 'particles'");
  }
  Json rows = Json::array();
  for (std::size_t k = 0; k < trace.measures.size(); ++k) {
    rows.push_back({{"step", trace.steps[k]}, {"mean", to_json(mean(trace.measures[k]))},
                    {"support", trace.measures[k].size()}, {"prune_loss", trace.prune_loss[k]}});
  }
  Json est = {{"summary", rows}};
  if (p.boolean_or("include_trace", false)) est["trace"] = to_json(trace);
  return {"completed", {{"name", "simulate"}, {"estimates", est}, {"parameters", params}}};
}

CheckOutcome run_invariant_residual(const JsonField& p, const ExperimentConfig& cfg) {
  const DiscreteIFS& ifs = require_ifs(cfg.model, p);
  const FiniteMeasure candidate = measure_or_grid(p["candidate"]);
  if (candidate.dim() != ifs.dim()) p["candidate"].fail("dimension does not match the system");
  const double residual = invariant_residual(ifs, candidate);
  return {"completed",
          {{"name", "invariant_residual"},
           {"estimates", {{"residual", residual}}},
           {"parameters", {{"candidate_atoms", candidate.size()}}}}};
}

CheckOutcome run_estimate_invariant(const JsonField& p, const ExperimentConfig& cfg) {
  if (const auto* chain = std::get_if<Chain>(&cfg.model)) {
    const Eigen::VectorXd pi = chain_stationary(*chain);
    const double res = (chain->matrix().transpose() * pi - pi).cwiseAbs().sum();
    return {"completed",
            {{"name", "estimate_invariant"},
             {"estimates", {{"stationary", std::vector<double>(pi.data(), pi.data() + pi.size())}, {"residual_l1", res}}},
             {"parameters", Json::object()}}};
  }
  const MarkovSystem sys = require_markov(cfg.model, p);
  const Eigen::Index d = model_dim(cfg.model);
  const auto steps = static_cast<std::size_t>(p.unsigned_or("steps", 50));
  const Point start = p.has("start") ? point_from(p["start"], d) : Point(Point::Zero(d));
  const double merge = p.number_or("merge_radius", 1e-3);
  const SamplerOptions s = sampler_from(p, cfg);
  ParticleCloud cloud(start, s.particles);
  for (std::size_t k = 1; k <= steps; ++k) cloud.advance(sys, k, s.seed, s.threads);
  const PruneResult pr = prune(cloud.empirical(), 0.0, merge, system_metric(sys));
  Json est = {{"particle_mean", to_json(mean(pr.measure))}, {"particle_support", pr.measure.size()},
              {"merge_transport_slack", pr.transport_slack}};
  if (const auto* ifs = std::get_if<DiscreteIFS>(&sys); ifs && pr.measure.size() <= kDefaultSupportCap) {
    est["particle_invariant_residual"] = invariant_residual(*ifs, pr.measure);
  }
  if (p.has("oracle")) {
    const FiniteMeasure oracle = measure_or_grid(p["oracle"]);
    est["fm_to_oracle"] = fm_distance(pr.measure, oracle, system_metric(sys)).value;
    est["fm_to_oracle_upper"] = est["fm_to_oracle"].get<double>() + pr.fm_bound();
  }
  return {"completed",
          {{"name", "estimate_invariant"},
           {"estimates", est},
           {"parameters", {{"steps", steps}, {"merge_radius", merge}, {"particles", s.particles}, {"seed", s.seed}}}}};
}

CheckOutcome run_couple_verify(const JsonField& p, const ExperimentConfig& cfg) {
  const Chain& chain = require_chain(cfg.model, p);
  const std::string construction = p.string_or("construction", "coupling_bound");
  const auto ball = indices_from(p["ball_states"]);
  const double alpha = p["alpha"].number();
  Json params = {{"construction", construction}, {"alpha", alpha}, {"ball_states", ball}};
  Json est;
  bool valid = true;
  auto check_cert = [&](const DecompositionCertificate& c) {
    valid = valid && c.reconstruction_residual <= 1e-12 && std::abs(c.coefficient_sum - 1.0) <= 1e-12 &&
            c.max_outside_mass == 0.0;
  };
  try {
    if (construction == "chain_decomposition") {
      const double epsilon = p["epsilon"].number();
      const auto K = static_cast<std::size_t>(p.unsigned_or("K", 3));
      const SigmaSchedule sched = sigma_schedule(alpha, epsilon, K);
      std::vector<std::size_t> times;
      if (p.has("times")) {
        times = sizes_from(p["times"]);
      } else {
        const double thr = p.number_or("gap_threshold", alpha * epsilon / 3.0);
        const CesaroTimes ct = doubling_cesaro_times(chain, K, thr);
        times = ct.times;
        est["time_selection_gaps"] = ct.gaps;
      }
      const Eigen::VectorXd start = p.has("start") ? dist_from(p["start"], chain) : chain.basis(0);
      params["epsilon"] = epsilon;
      params["K"] = K;
      params["times"] = times;
      est["sigmas"] = sched.sigmas;
      const DecompositionCertificate c = chain_decomposition(chain, start, ball, sched, times);
      check_cert(c);
      est["certificate"] = to_json(c);
    } else if (construction == "telescoping" || construction == "coupling_bound") {
      const Eigen::VectorXd mu1 = p.has("mu1") ? dist_from(p["mu1"], chain) : chain.basis(0);
      const Eigen::VectorXd mu2 = p.has("mu2") ? dist_from(p["mu2"], chain) : chain.basis(chain.states() - 1);
      std::vector<std::size_t> times;
      if (p.has("times")) {
        times = sizes_from(p["times"]);
      } else {
        times = telescoping_times(chain, mu1, mu2, ball, alpha, static_cast<std::size_t>(p.unsigned_or("k", 4)),
                                  static_cast<std::size_t>(p.unsigned_or("t_max", 1000)));
      }
      params["times"] = times;
      if (construction == "telescoping") {
        const TelescopingPair tp = telescoping_decomposition(chain, mu1, mu2, ball, alpha, times);
        check_cert(tp.first);
        check_cert(tp.second);
        est["first"] = to_json(tp.first);
        est["second"] = to_json(tp.second);
      } else {
        std::vector<Eigen::VectorXd> dict;
        if (p.has("functions")) {
          const JsonField fs = p["functions"];
          for (std::size_t i = 0; i < fs.size(); ++i) dict.push_back(fs[i].vector());
        } else {
          dict = chain_dictionary(chain, dictionary_from(p, cfg.model));
        }
        const CouplingBoundReport rep = coupling_bound_check(chain, mu1, mu2, alpha, times, ball, dict);
        check_cert(rep.certificates.first);
        check_cert(rep.certificates.second);
        Json rows = Json::array();
        for (const auto& r : rep.rows) {
          rows.push_back({{"k", r.k}, {"t", r.t}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"pass", r.pass}});
        }
        est["epsilon_phi"] = rep.epsilon_phi;
        est["rows"] = rows;
        est["bound_holds"] = rep.pass;
        valid = valid && rep.pass;
      }
    } else {
      p["construction"].fail("unknown construction '" + construction + "'");
    }
  } catch (const InadmissibleSplit& e) {
    est["inadmissible"] = {{"step", e.step()}, {"required", e.required()}, {"mass", e.mass()}, {"deficit", e.deficit()}};
    return {"refuted", {{"name", "couple_verify"}, {"verdict", "refuted"}, {"estimates", est}, {"parameters", params}}};
  } catch (const InputError& e) {
    if (std::string(e.what()).rfind("config error", 0) == 0) throw;
    p.fail(e.what());
  }
  est["identities_hold"] = valid;
  const char* status = valid ? "supported" : "inconclusive";
  return {status, {{"name", "couple_verify"}, {"verdict", status}, {"estimates", est}, {"parameters", params}}};
}

CheckOutcome run_oracle_chain(const JsonField& p, const ExperimentConfig& cfg) {
  const Chain& chain = require_chain(cfg.model, p);
  Json est;
  try {
    const Eigen::VectorXd pi = chain_stationary(chain);
    est["stationary"] = std::vector<double>(pi.data(), pi.data() + pi.size());
  } catch (const DegenerateError& e) {
    est["stationary"] = nullptr;
    est["stationary_note"] = e.what();
  }
  const ChainStructure st = analyze_chain(chain);
  est["class_period"] = st.class_period;
  est["class_of"] = st.class_of;
  Json closed = Json::array();
  for (bool b : st.class_closed) closed.push_back(b);
  est["class_closed"] = closed;

  const std::vector<std::size_t> ns = p.has("n") ? sizes_from(p["n"]) : std::vector<std::size_t>{10, 100, 1000};
  Json residuals = Json::array();
  bool bound_ok = true;
  for (Eigen::Index z = 0; z < chain.states(); ++z) {
    for (auto n : ns) {
      if (n == 0) p["n"].fail("entries must be >= 1");
      const double r = cesaro_tv_residual(chain, z, n);
      const double bound = 2.0 / static_cast<double>(n);
      bound_ok = bound_ok && r <= bound;
      residuals.push_back({{"z", z}, {"n", n}, {"residual", r}, {"bound", bound}});
    }
  }
  est["cesaro_tv_residuals"] = residuals;
  est["cesaro_bound_holds"] = bound_ok;

  const std::vector<std::size_t> times = p.has("times") ? sizes_from(p["times"]) : std::vector<std::size_t>{3, 5};
  const std::vector<std::size_t> Ts = p.has("T") ? sizes_from(p["T"]) : std::vector<std::size_t>{100, 1000, 10000};
  Json gaps = Json::array();
  for (auto T : Ts) {
    if (T == 0) p["T"].fail("entries must be >= 1");
    gaps.push_back({{"T", T}, {"gap", composed_cesaro_gap(chain, times, T)}});
  }
  est["composed_gaps"] = gaps;
  return {"completed", {{"name", "oracle_chain"}, {"estimates", est}, {"parameters", {{"n", ns}, {"times", times}, {"T", Ts}}}}};
}

CheckOutcome run_check(const std::string& kind, const JsonField& p, const ExperimentConfig& cfg) {
  const Eigen::Index d = model_dim(cfg.model);
  if (kind == "lower_bound") return status_of(lower_bound_mass_estimate(cfg.model, lower_bound_params(p, cfg)));
  if (kind == "stability") return status_of(stability_lower_bound_estimate(cfg.model, lower_bound_params(p, cfg)));
  if (kind == "e_property") {
    const MarkovSystem sys = require_markov(cfg.model, p);
    EPropertyParams ep;
    ep.x = point_from(p["x"], d);
    ep.radii = p.has("radii") ? p["radii"].numbers() : std::vector<double>{0.1, 0.05, 0.025, 0.0125};
    ep.horizon = static_cast<std::size_t>(p.unsigned_or("horizon", 12));
    ep.mode = mode_from(p, EvalMode::sampler);
    ep.sampler = sampler_from(p, cfg);
    ep.policy = policy_from(p);
    return status_of(e_property_probe(sys, dictionary_from(p, cfg.model), ep));
  }
  if (kind == "cauchy") {
    CauchyParams cp;
    if (std::holds_alternative<Chain>(cfg.model)) {
      cp.z_state = static_cast<Eigen::Index>(p.unsigned_or("z_state", 0));
    } else {
      cp.z = point_from(p["z"], d);
    }
    cp.grid = p.has("grid") ? sizes_from(p["grid"]) : std::vector<std::size_t>{8, 16, 32, 64};
    cp.mode = mode_from(p, EvalMode::sampler);
    cp.sampler = sampler_from(p, cfg);
    cp.full_depth = static_cast<std::size_t>(p.unsigned_or("full_depth", 6));
    cp.merge_radius = p.number_or("merge_radius", 1e-4);
    return status_of(cauchy_diagnostic(cfg.model, dictionary_from(p, cfg.model), cp));
  }
  if (kind == "uniform_compact") {
    UniformParams up;
    if (const auto* chain = std::get_if<Chain>(&cfg.model)) {
      if (p.has("grid_states")) up.grid_states = indices_from(p["grid_states"]);
      if (p.has("mu_star_chain")) up.mu_star_chain = dist_from(p["mu_star_chain"], *chain);
    } else {
      up.grid = points_from(p["grid"], d);
      up.mu_star = measure_or_grid(p["mu_star"]);
    }
    up.horizon = static_cast<std::size_t>(p.unsigned_or("horizon", 20));
    up.mode = mode_from(p, EvalMode::sampler);
    up.sampler = sampler_from(p, cfg);
    up.policy = policy_from(p);
    up.tolerance = p.number_or("tolerance", 0.05);
    return status_of(uniform_compact_convergence(cfg.model, dictionary_from(p, cfg.model), up));
  }
  if (kind == "invariant_residual") return run_invariant_residual(p, cfg);
  if (kind == "estimate_invariant") return run_estimate_invariant(p, cfg);
  if (kind == "conditions") return run_conditions(p, cfg);
  if (kind == "simulate") return run_simulate(p, cfg);
  if (kind == "couple_verify") return run_couple_verify(p, cfg);
  if (kind == "oracle_chain") return run_oracle_chain(p, cfg);
  p["kind"].fail("unknown check kind '" + kind + "'");
}

std::string iso_time(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json hashed_config(const Json& raw) {
  Json c = raw;
  c.erase("threads");
  c.erase("output");
  return c;
}

}  // namespace

std::optional<Command> parse_command(const std::string& name) {
  for (Command c : kAllCommands) {
    if (name == to_string(c)) return c;
  }
  return std::nullopt;
}

const char* to_string(Command c) {
  switch (c) {
    case Command::run: return "run";
    case Command::simulate: return "simulate";
    case Command::estimate_invariant: return "estimate-invariant";
    case Command::check_conditions: return "check-conditions";
    case Command::check_criteria: return "check-criteria";
    case Command::couple_verify: return "couple-verify";
    case Command::oracle_chain: return "oracle-chain";
  }
  return "run";
}

ExperimentConfig parse_config(const Json& doc, std::optional<std::uint64_t> seed_override) {
  const JsonField root(doc, "");
  if (!doc.is_object()) root.fail("config must be a JSON object");
  if (!root["system"].json().is_object()) root["system"].fail("expected an object");
  ExperimentConfig cfg{.raw = doc, .model = model_from_json(root["system"]), .checks = {}, .seed = 0,
                       .format = "json", .output_path = {}, .threads = 1};
  if (seed_override) {
    cfg.seed = *seed_override;
  } else {
    cfg.seed = root["seed"].unsigned_integer();
  }
  cfg.raw["seed"] = cfg.seed;
  if (root.has("checks")) {
    const JsonField checks = root["checks"];
    for (std::size_t i = 0; i < checks.size(); ++i) {
      const JsonField c = checks[i];
      if (!c.json().is_object()) c.fail("expected an object");
      c["kind"].string();
      cfg.checks.push_back(c.json());
    }
  }
  if (root.has("output")) {
    const JsonField out = root["output"];
    cfg.format = out.string_or("format", "json");
    if (cfg.format != "json" && cfg.format != "csv") out["format"].fail("expected 'json' or 'csv'");
    cfg.output_path = out.string_or("path", "");
  }
  if (root.has("threads")) {
    cfg.threads = static_cast<unsigned>(root["threads"].unsigned_integer());
    if (cfg.threads == 0) root["threads"].fail("must be >= 1");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc, seed_override);
}

std::string determinism_hash(const Json& report) {
  Json payload = report;
  payload.erase("metadata");
  payload.erase("determinism_hash");
  return fnv1a_hex(payload.dump());
}

Json run_experiment(const ExperimentConfig& cfg, Command command) {
  const auto started = std::chrono::system_clock::now();
  std::vector<Json> checks;
  for (const auto& c : cfg.checks) {
    if (belongs(c["kind"].get<std::string>(), command)) checks.push_back(c);
  }
  if (checks.empty()) {
    if (auto d = default_check(command, cfg.model)) checks.push_back(*d);
  }

  Json results = Json::array();
  Json timings = Json::object();
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const Json& c = checks[i];
    const std::string kind = c["kind"].get<std::string>();
    const std::string name = c.contains("name") && c["name"].is_string() ? c["name"].get<std::string>()
                                                                         : kind + "#" + std::to_string(i);
    const JsonField field(c, "/checks/" + std::to_string(i));
    const auto t0 = std::chrono::steady_clock::now();
    CheckOutcome out;
    try {
      out = run_check(kind, field, cfg);
    } catch (const ResourceError& e) {
      throw ResourceError("check '" + name + "': " + e.what());
    } catch (const InputError&) {
      throw;
    } catch (const Error& e) {
      out = {"error", {{"name", kind}, {"error", e.what()}}};
    }
    timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    results.push_back({{"name", name}, {"kind", kind}, {"status", out.status}, {"report", out.report}});
  }

  Json report = {{"schema_version", kSchemaVersion},
                 {"tool_version", kToolVersion},
                 {"command", to_string(command)},
                 {"config_hash", fnv1a_hex(hashed_config(cfg.raw).dump())},
                 {"seed", cfg.seed},
                 {"results", results}};
  report["determinism_hash"] = determinism_hash(report);
  report["metadata"] = {{"started_at", iso_time(started)},
                        {"finished_at", iso_time(std::chrono::system_clock::now())},
                        {"wall_clock_seconds", timings},
                        {"threads", cfg.threads}};
  return report;
}

namespace {

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else if (j.is_string()) {
    out.emplace_back(prefix, j.get<std::string>());
  } else {
    out.emplace_back(prefix, j.dump());
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

std::string report_to_csv(const Json& report) {
  std::ostringstream os;
  os << "check,kind,status,key,value\n";
  for (const auto& r : report.at("results")) {
    std::vector<std::pair<std::string, std::string>> rows;
    flatten(r.at("report").contains("estimates") ? r.at("report").at("estimates") : r.at("report"), "", rows);
    for (const auto& [k, v] : rows) {
      os << csv_field(r.at("name").get<std::string>()) << ',' << r.at("kind").get<std::string>() << ','
         << r.at("status").get<std::string>() << ',' << csv_field(k) << ',' << csv_field(v) << '\n';
    }
  }
  return os.str();
}

}  // namespace feller
