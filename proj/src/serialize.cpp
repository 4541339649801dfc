#include "feller/serialize.hpp"

#include <cstdio>
#include <sstream>

namespace feller {

// ---- JsonField ----------------------------------------------------------------

void JsonField::fail(const std::string& what) const {
  throw InputError("config error at " + (path_.empty() ? std::string("/") : path_) + ": " + what);
}

bool JsonField::has(const std::string& key) const {
  return value_->is_object() && value_->contains(key) && !(*value_)[key].is_null();
}

JsonField JsonField::operator[](const std::string& key) const {
  if (!value_->is_object()) fail("expected an object");
  if (!value_->contains(key)) JsonField(*value_, path_ + "/" + key).fail("missing field");
  return {(*value_)[key], path_ + "/" + key};
}

JsonField JsonField::operator[](std::size_t index) const {
  if (!value_->is_array()) fail("expected an array");
  if (index >= value_->size()) fail("index " + std::to_string(index) + " out of range");
  return {(*value_)[index], path_ + "/" + std::to_string(index)};
}

std::size_t JsonField::size() const {
  if (!value_->is_array()) fail("expected an array");
  return value_->size();
}

double JsonField::number() const {
  if (!value_->is_number()) fail("expected a number");
  const double v = value_->get<double>();
  if (!std::isfinite(v)) fail("expected a finite number");
  return v;
}

std::uint64_t JsonField::unsigned_integer() const {
  if (!value_->is_number_unsigned()) {
    if (value_->is_number_integer() && value_->get<std::int64_t>() >= 0) return value_->get<std::uint64_t>();
    fail("expected a nonnegative integer");
  }
  return value_->get<std::uint64_t>();
}

std::string JsonField::string() const {
  if (!value_->is_string()) fail("expected a string");
  return value_->get<std::string>();
}

bool JsonField::boolean() const {
  if (!value_->is_boolean()) fail("expected a boolean");
  return value_->get<bool>();
}

std::vector<double> JsonField::numbers() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].number());
  return out;
}

Eigen::VectorXd JsonField::vector() const {
  const auto v = numbers();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd JsonField::matrix() const {
  const std::size_t rows = size();
  if (rows == 0) fail("expected a nonempty matrix");
  const std::size_t cols = (*this)[0].size();
  Eigen::MatrixXd M(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const JsonField row = (*this)[i];
    if (row.size() != cols) row.fail("ragged matrix row");
    for (std::size_t j = 0; j < cols; ++j) M(i, j) = row[j].number();
  }
  return M;
}

double JsonField::number_or(const std::string& key, double fallback) const {
  return has(key) ? (*this)[key].number() : fallback;
}
std::uint64_t JsonField::unsigned_or(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? (*this)[key].unsigned_integer() : fallback;
}
std::string JsonField::string_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? (*this)[key].string() : fallback;
}
bool JsonField::boolean_or(const std::string& key, bool fallback) const {
  return has(key) ? (*this)[key].boolean() : fallback;
}

// ---- to_json --------------------------------------------------------------------

Json to_json(const Point& p) { return std::vector<double>(p.data(), p.data() + p.size()); }

Json to_json(const FiniteMeasure& m) {
  Json atoms = Json::array();
  for (Eigen::Index j = 0; j < m.size(); ++j) atoms.push_back({to_json(m.point(j)), m.weight(j)});
  return {{"atoms", atoms}};
}

Json to_json(const TransportResult& r) {
  return {{"value", r.value},
          {"potentials", std::vector<double>(r.potentials.data(), r.potentials.data() + r.potentials.size())},
          {"box_residual", r.box_residual},
          {"lipschitz_residual", r.lipschitz_residual},
          {"primal_cost", r.primal_cost},
          {"duality_gap", r.duality_gap}};
}

Json to_json(const CriterionReport& r) {
  return {{"name", r.name},
          {"verdict", to_string(r.verdict)},
          {"estimates", r.estimates},
          {"parameters", r.parameters},
          {"caveats", r.caveats}};
}

namespace {
Json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
}  // namespace

Json to_json(const DecompositionCertificate& c) {
  Json terms = Json::array();
  for (const auto& t : c.terms) {
    terms.push_back({{"coefficient", t.coefficient},
                     {"tag", to_string(t.tag)},
                     {"step", t.step},
                     {"base", vec_json(t.base)},
                     {"propagated", vec_json(t.propagated)}});
  }
  return {{"terms", terms},
          {"target", vec_json(c.target)},
          {"reconstruction_residual", c.reconstruction_residual},
          {"coefficient_sum", c.coefficient_sum},
          {"ball_mass_witnesses", c.ball_mass_witnesses},
          {"split_masses", c.split_masses},
          {"required_masses", c.required_masses},
          {"max_outside_mass", c.max_outside_mass}};
}

Json to_json(const EvolutionTrace& t) {
  Json measures = Json::array();
  for (std::size_t k = 0; k < t.measures.size(); ++k) {
    Json m = to_json(t.measures[k]);
    m["step"] = t.steps[k];
    m["prune_loss"] = t.prune_loss[k];
    measures.push_back(std::move(m));
  }
  Json j = {{"measures", measures},
            {"policy",
             {{"enabled", t.policy.enabled},
              {"mass_floor", t.policy.mass_floor},
              {"merge_radius", t.policy.merge_radius},
              {"budget", t.policy.budget}}}};
  j["seed"] = t.seed ? Json(*t.seed) : Json(nullptr);
  return j;
}

Json to_json(const ConditionEstimate& c) {
  Json j = {{"observed", c.observed}, {"pairs", c.pairs}, {"value", c.value()}, {"basis", c.basis()}};
  j["analytic"] = c.analytic ? Json(*c.analytic) : Json(nullptr);
  return j;
}

Json to_json(const ModuliReport& m) {
  Json tails = Json::array();
  for (double t : m.tail_bounds) tails.push_back(std::isfinite(t) ? Json(t) : Json("inf"));
  return {{"grid", m.grid},     {"partial_sums", m.partial_sums}, {"tail_bounds", tails},
          {"witnesses", m.witnesses}, {"concave", m.concave},   {"pass", m.pass}};
}

// ---- from_json ------------------------------------------------------------------

FiniteMeasure measure_from_json(const JsonField& f) {
  const JsonField atoms = f["atoms"];
  const std::size_t n = atoms.size();
  if (n == 0) atoms.fail("measure needs at least one atom");
  std::vector<std::pair<Point, double>> list;
  for (std::size_t i = 0; i < n; ++i) {
    const JsonField atom = atoms[i];
    if (atom.size() != 2) atom.fail("atom must be [coords, weight]");
    list.emplace_back(atom[0].vector(), atom[1].number());
  }
  try {
    return FiniteMeasure::from_list(list);
  } catch (const Error& e) {
    f.fail(e.what());
  }
}

MetricSpec metric_from_json(const JsonField& f) {
  const std::string kind = f["kind"].string();
  if (kind == "euclidean") return MetricSpec::euclidean();
  if (kind == "chebyshev") return MetricSpec::chebyshev();
  if (kind == "truncated") {
    try {
      return MetricSpec::truncated(f["cap"].number());
    } catch (const InputError& e) {
      f["cap"].fail(e.what());
    }
  }
  f["kind"].fail("unknown metric kind '" + kind + "'");
}

TestFunction test_function_from_json(const JsonField& f, const MetricSpec& metric) {
  const std::string kind = f["kind"].string();
  try {
    if (kind == "tent") return TestFunction::tent(f["center"].vector(), f["scale"].number(), metric);
    if (kind == "clipped_coordinate") {
      return TestFunction::clipped_coordinate(static_cast<Eigen::Index>(f.unsigned_or("index", 0)),
                                              f.number_or("lo", -1.0), f.number_or("hi", 1.0));
    }
    if (kind == "clipped_polynomial") {
      return TestFunction::clipped_polynomial(static_cast<Eigen::Index>(f.unsigned_or("index", 0)),
                                              f["coeffs"].numbers(), f.number_or("clip", 1.0));
    }
    if (kind == "constant") return TestFunction::constant(f["value"].number());
  } catch (const InputError& e) {
    if (std::string(e.what()).rfind("config error", 0) == 0) throw;
    f.fail(e.what());
  }
  f["kind"].fail("unknown test function kind '" + kind + "'");
}

namespace {

// A map is {"A": matrix | number, "b": vector | number}.
AffineMap map_from_json(const JsonField& f) {
  const JsonField A = f["A"], b = f["b"];
  Eigen::VectorXd v = b.json().is_number() ? Eigen::VectorXd::Constant(1, b.number()) : b.vector();
  // a scalar A is a * I
  Eigen::MatrixXd a = A.json().is_number() ? Eigen::MatrixXd(A.number() * Eigen::MatrixXd::Identity(v.size(), v.size()))
                                           : A.matrix();
  try {
    return AffineMap(std::move(a), std::move(v));
  } catch (const InputError& e) {
    f.fail(e.what());
  }
}

ProbabilityField probs_from_json(const JsonField& f, std::size_t maps, Eigen::Index dim) {
  const std::string kind = f["kind"].string();
  try {
    if (kind == "constant") {
      auto w = f["weights"].vector();
      if (static_cast<std::size_t>(w.size()) != maps) f["weights"].fail("need one weight per map");
      return ProbabilityField::constant(std::move(w));
    }
    if (kind == "softmax") {
      const JsonField th = f["theta"];
      Eigen::MatrixXd theta;
      if (dim == 1 && th.size() > 0 && th[0].json().is_number()) {
        theta = th.vector();
      } else {
        theta = th.matrix();
      }
      if (static_cast<std::size_t>(theta.rows()) != maps || theta.cols() != dim) {
        th.fail("theta must be N x d");
      }
      Eigen::VectorXd c = f.has("offsets") ? f["offsets"].vector() : Eigen::VectorXd::Zero(theta.rows());
      if (c.size() != theta.rows()) f["offsets"].fail("need one offset per map");
      return ProbabilityField::softmax(std::move(theta), std::move(c));
    }
  } catch (const InputError& e) {
    if (std::string(e.what()).rfind("config error", 0) == 0) throw;
    f.fail(e.what());
  }
  f["kind"].fail("unknown probability field '" + kind + "'");
}

}  // namespace

Model model_from_json(const JsonField& f) {
  const std::string type = f["type"].string();
  if (type == "chain") {
    Eigen::MatrixXd P = f["matrix"].matrix();
    std::vector<Point> embedding;
    if (f.has("embedding")) {
      const JsonField e = f["embedding"];
      for (std::size_t i = 0; i < e.size(); ++i) {
        embedding.push_back(e[i].json().is_number() ? Eigen::VectorXd::Constant(1, e[i].number()) : e[i].vector());
      }
    }
    try {
      return Chain(std::move(P), std::move(embedding));
    } catch (const InputError& e) {
      f["matrix"].fail(e.what());
    }
  }
  if (type != "ifs" && type != "jumpflow") f["type"].fail("unknown system type '" + type + "'");

  const MetricSpec metric = f.has("metric") ? metric_from_json(f["metric"]) : MetricSpec::euclidean();
  const JsonField maps_f = f["maps"];
  if (maps_f.size() == 0) maps_f.fail("need at least one map");
  std::vector<AffineMap> maps;
  for (std::size_t i = 0; i < maps_f.size(); ++i) maps.push_back(map_from_json(maps_f[i]));
  const Eigen::Index dim = maps.front().dim();
  ProbabilityField probs = f.has("probs")
                               ? probs_from_json(f["probs"], maps.size(), dim)
                               : ProbabilityField::constant(Eigen::VectorXd::Constant(
                                     static_cast<Eigen::Index>(maps.size()), 1.0 / static_cast<double>(maps.size())));
  try {
    if (type == "ifs") return DiscreteIFS(std::move(maps), std::move(probs), metric);
    const JsonField flow = f["flow"];
    Eigen::VectorXd lambda = flow["lambda"].json().is_number() ? Eigen::VectorXd::Constant(1, flow["lambda"].number())
                                                               : flow["lambda"].vector();
    return JumpFlowSystem(FlowSpec(std::move(lambda)), f["gamma"].number(), std::move(maps), std::move(probs),
                          metric);
  } catch (const InputError& e) {
    if (std::string(e.what()).rfind("config error", 0) == 0) throw;
    f.fail(e.what());
  }
}

// ---- CSV ------------------------------------------------------------------------

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

std::string measure_to_csv(const FiniteMeasure& m) {
  std::ostringstream os;
  for (Eigen::Index k = 0; k < m.dim(); ++k) os << "x_" << (k + 1) << ',';
  os << "weight\n";
  for (Eigen::Index j = 0; j < m.size(); ++j) {
    for (Eigen::Index k = 0; k < m.dim(); ++k) os << fmt(m.points()(k, j)) << ',';
    os << fmt(m.weight(j)) << '\n';
  }
  return os.str();
}

std::string trace_to_csv(const EvolutionTrace& t) {
  std::ostringstream os;
  const Eigen::Index d = t.measures.empty() ? 0 : t.measures.front().dim();
  os << "step,";
  for (Eigen::Index k = 0; k < d; ++k) os << "x_" << (k + 1) << ',';
  os << "weight\n";
  for (std::size_t s = 0; s < t.measures.size(); ++s) {
    const auto& m = t.measures[s];
    for (Eigen::Index j = 0; j < m.size(); ++j) {
      os << t.steps[s] << ',';
      for (Eigen::Index k = 0; k < d; ++k) os << fmt(m.points()(k, j)) << ',';
      os << fmt(m.weight(j)) << '\n';
    }
  }
  return os.str();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace feller
