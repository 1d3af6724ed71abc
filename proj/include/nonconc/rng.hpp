#pragma once

#include <cstdint>

namespace nonconc {

// Name reported in run manifests; changing the generator is a breaking change
// for reproducibility.
inline constexpr const char* kGeneratorName = "splitmix64-counter/as241";

// Counter-based generator: output_i = splitmix64_mix(key + i*gamma).
// Streams are independent for distinct (seed, stream) keys, so replications
// (and variables within a replication) can be generated in any order or in
// parallel without affecting the values drawn.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  // Uniform on (0, 1), never exactly 0 or 1.
  double uniform();
  // Standard normal via the inverse-CDF applied to uniform().
  double normal();
  bool bernoulli(double p);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stream id for (replication, variable) pairs; var must be < 16.
std::uint64_t substream(std::uint64_t rep, unsigned var);

}  // namespace nonconc
