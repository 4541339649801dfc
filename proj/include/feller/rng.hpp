#pragma once

#include <cmath>
#include <cstdint>

namespace feller {

// Counter-based generator: the n-th draw of a stream is a pure function of
// (seed, trajectory, step, n). Streams for distinct keys are independent, so
// results do not depend on execution order or thread count.
class KeyedStream {
 public:
  KeyedStream(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step)
      : key_(mix(mix(mix(seed ^ 0x6a09e667f3bcc909ULL) ^ trajectory) ^
                 (step * 0x9e3779b97f4a7c15ULL))),
        trajectory_(trajectory),
        step_(step) {}

  std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Exp(rate) by inversion.
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  std::uint64_t trajectory() const { return trajectory_; }
  std::uint64_t step() const { return step_; }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t trajectory_;
  std::uint64_t step_;
  std::uint64_t counter_ = 0;
};

}  // namespace feller
