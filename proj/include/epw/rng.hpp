#pragma once

#include <cstdint>

namespace epw {

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Combine a seed with up to two stream keys into an independent stream base.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t key_hi,
                            std::uint64_t key_lo = 0);

// Counter-based generator (splitmix64). Streams derived from the same
// (seed, key) are identical no matter how many sibling streams were drawn
// from, so batches sample bit-identically under any parallel schedule.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t key_hi = 0,
                     std::uint64_t key_lo = 0)
      : state_(derive_stream(seed, key_hi, key_lo)) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double next_double();

  // Uniform over {0, ..., n-1}; n >= 1.
  int next_index(int n);

  // Standard normal via Box-Muller.
  double next_gaussian();

 private:
  std::uint64_t state_;
};

}  // namespace epw
