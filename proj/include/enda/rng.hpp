#pragma once

#include <cstdint>
#include <random>

namespace enda {

/// Named substreams so that the components of an experiment draw from
/// independent, individually reproducible sources. Adding a consumer to one
/// stream never shifts the draws seen by another.
enum class RngStreamId : std::uint64_t {
  truth_observations = 1,   // reference observations of the truth
  member_observations = 2,  // per-member perturbation noise
  initial_ensemble = 3,     // initial ensemble spread
};

/// One splittable stream: a mt19937_64 engine keyed by (seed, stream id)
/// through splitmix64. All variates are produced by inverse-CDF transforms of
/// the 53-bit uniforms below, so a stream's output is a pure function of the
/// seed, the stream id, and the number of draws consumed.
class RngStream {
 public:
  RngStream(std::uint64_t seed, RngStreamId id)
      : engine_(mix(seed, static_cast<std::uint64_t>(id))) {}

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on the open interval (0, 1); safe as a quantile argument.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double standard_normal();

 private:
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t id) {
    // splitmix64 finalizer over the seed advanced by the stream id
    std::uint64_t z = seed + id * 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace enda
