#include "feller/semigroup.hpp"

#include <algorithm>
#include <string>

#include "feller/parallel.hpp"

namespace feller {

EvolutionTrace evolve_exact(const DiscreteIFS& ifs, const FiniteMeasure& m0, std::size_t steps,
                            const PrunePolicy& policy) {
  m0.validate();
  if (m0.dim() != ifs.dim()) throw InputError("initial measure dimension does not match the system");
  EvolutionTrace trace;
  trace.policy = policy;
  trace.measures.reserve(steps + 1);
  trace.measures.push_back(m0);
  trace.steps.push_back(0);
  trace.prune_loss.push_back(0.0);
  trace.merge_slack.push_back(0.0);

  double dropped = 0.0, slack = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    FiniteMeasure next;
    try {
      next = dual_step_exact(ifs, trace.measures.back(), policy.support_cap);
    } catch (const ResourceError& e) {
      throw ResourceError("exact evolution, step " + std::to_string(k) + ": " + e.what());
    }
    if (policy.enabled) {
      PruneResult pr = prune(next, policy.mass_floor, policy.merge_radius, ifs.metric);
      dropped += pr.dropped_mass;
      slack += pr.transport_slack;
      if (dropped > policy.budget) {
        throw ResourceError("exact evolution, step " + std::to_string(k) +
                            ": pruned mass " + std::to_string(dropped) + " exceeds the budget");
      }
      next = std::move(pr.measure);
    }
    trace.measures.push_back(std::move(next));
    trace.steps.push_back(k);
    trace.prune_loss.push_back(dropped);
    trace.merge_slack.push_back(slack);
  }
  return trace;
}

ParticleCloud::ParticleCloud(const Point& start, std::size_t count) {
  if (count == 0) throw InputError("particle count must be >= 1");
  require_finite(start, "start point");
  positions_ = start.replicate(1, static_cast<Eigen::Index>(count));
}

ParticleCloud::ParticleCloud(const FiniteMeasure& start, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw InputError("particle count must be >= 1");
  start.validate();
  positions_.resize(start.dim(), static_cast<Eigen::Index>(count));
  std::vector<double> cdf(static_cast<std::size_t>(start.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < start.size(); ++i) cdf[i] = (acc += start.weight(i));
  for (std::size_t j = 0; j < count; ++j) {
    KeyedStream s(seed, j, 0);
    const double u = s.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    positions_.col(static_cast<Eigen::Index>(j)) = start.points().col(it - cdf.begin());
  }
}

void ParticleCloud::advance(const MarkovSystem& system, std::size_t step, std::uint64_t seed,
                            unsigned threads) {
  if (system_dim(system) != positions_.rows()) throw InputError("particle dimension does not match the system");
  parallel_for(count(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      KeyedStream s(seed, j, step);
      const auto col = static_cast<Eigen::Index>(j);
      positions_.col(col) = step_sample(system, Point(positions_.col(col)), s);
    }
  });
}

FiniteMeasure ParticleCloud::empirical() const {
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(positions_.cols(), 1.0 / static_cast<double>(count()));
  return FiniteMeasure::from_unnormalized(positions_, w);
}

EvolutionTrace evolve_particles(const MarkovSystem& system, const StartSpec& start,
                                std::size_t steps, const ParticleOptions& options) {
  if (options.count == 0) throw InputError("particle count must be >= 1");
  if (options.record_stride == 0) throw InputError("record stride must be >= 1");
  ParticleCloud cloud = std::holds_alternative<Point>(start)
                            ? ParticleCloud(std::get<Point>(start), options.count)
                            : ParticleCloud(std::get<FiniteMeasure>(start), options.count, options.seed);
  EvolutionTrace trace;
  trace.seed = options.seed;
  trace.policy = PrunePolicy::disabled();
  auto record = [&](std::size_t k) {
    trace.measures.push_back(cloud.empirical());
    trace.steps.push_back(k);
    trace.prune_loss.push_back(0.0);
    trace.merge_slack.push_back(0.0);
  };
  record(0);
  for (std::size_t k = 1; k <= steps; ++k) {
    cloud.advance(system, k, options.seed, options.threads);
    if (k % options.record_stride == 0 || k == steps) record(k);
  }
  return trace;
}

FiniteMeasure cesaro_average(std::span<const FiniteMeasure> slice) {
  if (slice.empty()) throw InputError("Cesaro average of an empty slice");
  std::vector<double> coefs(slice.size(), 1.0 / static_cast<double>(slice.size()));
  return mixture(coefs, slice);
}

FiniteMeasure cesaro_average(const EvolutionTrace& trace, std::size_t n) {
  if (n == 0) throw InputError("Cesaro average needs n >= 1");
  if (trace.measures.size() <= n) throw InputError("trace is shorter than the Cesaro horizon");
  for (std::size_t k = 0; k <= n; ++k) {
    if (trace.steps[k] != k) throw InputError("Cesaro average needs an unstrided trace");
  }
  return cesaro_average(std::span<const FiniteMeasure>(trace.measures).subspan(1, n));
}

}  // namespace feller
