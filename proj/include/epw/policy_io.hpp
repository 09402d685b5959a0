#pragma once

#include <iosfwd>
#include <string>

#include "epw/policy.hpp"

namespace epw {

// Flat numeric text format with a header line
//   epw-policy 1 FAMILY DTHETA SLOTS
// followed by one hex-float per value, slot-major. Hex floats make the
// round trip bit-exact for binary64.
void save_policy_vector(const PolicyVector& v, const std::string& family_tag,
                        std::ostream& out);
void save_policy_vector_file(const PolicyVector& v, const std::string& family_tag,
                             const std::string& path);

struct LoadedPolicy {
  PolicyVector vector;
  std::string family_tag;
  int param_dim = 0;
};

LoadedPolicy load_policy_vector(std::istream& in);
LoadedPolicy load_policy_vector_file(const std::string& path);

}  // namespace epw
