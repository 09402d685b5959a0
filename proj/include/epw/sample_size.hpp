#pragma once

#include <cstdint>
#include <string>

namespace epw {

struct SampleSizeInputs {
  double eps = 0.1;
  double delta = 0.05;
  int horizon = 2;
  int action_count = 2;
  int window = 0;  // the planning constant C (or an upper bound)
  int theta_dim = 1;
  double rho = 1.0;
  double bound = 1.0;  // B
};

struct SampleSizeResult {
  double leading_factor = 0.0;  // 4 H^2 |A|^(2C+2) / eps^2
  double log_term = 0.0;        // ln(2H/delta) + d ln(1 + 32 H |A|^(C+1) C rho B / eps)
  bool astronomical = false;    // exceeded 2^63-1 or overflowed
  std::uint64_t n = 0;          // ceil of the product when representable
};

// n = ceil(leading_factor * log_term), natural logarithms throughout.
SampleSizeResult theorem1_sample_size(const SampleSizeInputs& in);

// The same quantity evaluated in extended precision and printed exactly,
// for inputs whose n saturates the fast path.
std::string theorem1_sample_size_exact(const SampleSizeInputs& in);

}  // namespace epw
