#include "epw/rng.hpp"

#include <cassert>
#include <cmath>

namespace epw {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t key_hi,
                            std::uint64_t key_lo) {
  std::uint64_t s = mix64(seed + kGolden);
  s = mix64(s ^ (key_hi + kGolden));
  s = mix64(s ^ (key_lo + kGolden));
  return s;
}

std::uint64_t RngStream::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int RngStream::next_index(int n) {
  assert(n >= 1);
  const unsigned __int128 wide =
      static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned>(n);
  return static_cast<int>(wide >> 64);
}

double RngStream::next_gaussian() {
  const double u1 = 1.0 - next_double();  // (0, 1]
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace epw
