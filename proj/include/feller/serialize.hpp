#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "feller/chain.hpp"
#include "feller/coupling.hpp"
#include "feller/criteria.hpp"
#include "feller/measure.hpp"
#include "feller/semigroup.hpp"
#include "feller/system.hpp"
#include "feller/transport.hpp"

namespace feller {

// Read access to a JSON value that remembers where it sits in the document,
// so validation errors name the offending field ("/system/maps/0/A").
class JsonField {
 public:
  JsonField(const Json& value, std::string path) : value_(&value), path_(std::move(path)) {}

  const Json& json() const { return *value_; }
  const std::string& path() const { return path_; }

  bool has(const std::string& key) const;
  JsonField operator[](const std::string& key) const;  // throws if missing
  JsonField operator[](std::size_t index) const;
  std::size_t size() const;  // array length; throws unless an array

  double number() const;
  std::uint64_t unsigned_integer() const;
  std::string string() const;
  bool boolean() const;
  std::vector<double> numbers() const;
  Eigen::VectorXd vector() const;
  Eigen::MatrixXd matrix() const;  // array of equal-length rows

  // Optional lookups with defaults.
  double number_or(const std::string& key, double fallback) const;
  std::uint64_t unsigned_or(const std::string& key, std::uint64_t fallback) const;
  std::string string_or(const std::string& key, const std::string& fallback) const;
  bool boolean_or(const std::string& key, bool fallback) const;

  [[noreturn]] void fail(const std::string& what) const;

 private:
  const Json* value_;
  std::string path_;
};

Json to_json(const Point& p);
Json to_json(const FiniteMeasure& m);
Json to_json(const TransportResult& r);
Json to_json(const CriterionReport& r);
Json to_json(const DecompositionCertificate& c);
Json to_json(const EvolutionTrace& t);
Json to_json(const ConditionEstimate& c);
Json to_json(const ModuliReport& m);

// {"atoms": [[[x_1, ..., x_d], weight], ...]}
FiniteMeasure measure_from_json(const JsonField& f);
MetricSpec metric_from_json(const JsonField& f);
TestFunction test_function_from_json(const JsonField& f, const MetricSpec& metric);
// {"type": "ifs" | "jumpflow" | "chain", ...}
Model model_from_json(const JsonField& f);

// Columns x_1..x_d, weight.
std::string measure_to_csv(const FiniteMeasure& m);
// Columns step, x_1..x_d, weight.
std::string trace_to_csv(const EvolutionTrace& t);

// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace feller
