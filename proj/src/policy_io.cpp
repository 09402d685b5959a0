#include "epw/policy_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "epw/errors.hpp"

namespace epw {

void save_policy_vector(const PolicyVector& v, const std::string& family_tag,
                        std::ostream& out) {
  if (v.slots.empty()) throw ConfigError("cannot save an empty policy vector");
  const int dim = v.slots.front().dim();
  out << "epw-policy 1 " << family_tag << ' ' << dim << ' ' << v.slots.size()
      << "\n";
  char buf[64];
  for (const PolicyParams& p : v.slots) {
    if (p.dim() != dim) throw ConfigError("policy vector has ragged slots");
    for (double x : p.values) {
      std::snprintf(buf, sizeof(buf), "%a", x);
      out << buf << "\n";
    }
  }
}

void save_policy_vector_file(const PolicyVector& v, const std::string& family_tag,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open policy file for writing: " + path);
  save_policy_vector(v, family_tag, out);
}

LoadedPolicy load_policy_vector(std::istream& in) {
  std::string magic;
  int version = 0;
  LoadedPolicy res;
  std::size_t slots = 0;
  if (!(in >> magic >> version >> res.family_tag >> res.param_dim >> slots) ||
      magic != "epw-policy" || version != 1 || res.param_dim < 1 || slots < 1)
    throw ConfigError("policy file: bad header");
  res.vector.slots.resize(slots);
  std::string token;
  for (PolicyParams& p : res.vector.slots) {
    p.values.resize(static_cast<std::size_t>(res.param_dim));
    for (double& x : p.values) {
      if (!(in >> token)) throw ConfigError("policy file: truncated values");
      char* endp = nullptr;
      x = std::strtod(token.c_str(), &endp);
      if (endp == token.c_str())
        throw ConfigError("policy file: bad numeric token '" + token + "'");
    }
  }
  return res;
}

LoadedPolicy load_policy_vector_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open policy file: " + path);
  return load_policy_vector(in);
}

}  // namespace epw
