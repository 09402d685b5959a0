#include "epw/sample_size.hpp"

#include <cmath>
#include <limits>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "epw/errors.hpp"

namespace epw {

namespace {

void check_inputs(const SampleSizeInputs& in) {
  if (!(in.eps > 0.0 && in.eps < 1.0) || !(in.delta > 0.0 && in.delta < 1.0))
    throw ConfigError("sample size: eps and delta must lie in (0, 1)");
  if (in.horizon < 1 || in.action_count < 2 || in.window < 0 ||
      in.theta_dim < 1 || in.rho <= 0.0 || in.bound <= 0.0)
    throw ConfigError("sample size: bad problem parameters");
}

}  // namespace

SampleSizeResult theorem1_sample_size(const SampleSizeInputs& in) {
  check_inputs(in);
  SampleSizeResult out;
  const double H = static_cast<double>(in.horizon);
  const double A = static_cast<double>(in.action_count);
  const double C = static_cast<double>(in.window);
  out.leading_factor =
      4.0 * H * H * std::pow(A, 2.0 * C + 2.0) / (in.eps * in.eps);
  out.log_term =
      std::log(2.0 * H / in.delta) +
      static_cast<double>(in.theta_dim) *
          std::log1p(32.0 * H * std::pow(A, C + 1.0) * C * in.rho * in.bound /
                     in.eps);
  const double raw = out.leading_factor * out.log_term;
  if (!std::isfinite(raw) || raw >= 9.2e18) {
    out.astronomical = true;
    out.n = std::numeric_limits<std::uint64_t>::max();
    return out;
  }
  out.n = static_cast<std::uint64_t>(std::ceil(raw));
  return out;
}

std::string theorem1_sample_size_exact(const SampleSizeInputs& in) {
  check_inputs(in);
  using Real = boost::multiprecision::cpp_bin_float_100;
  using Int = boost::multiprecision::cpp_int;
  const Real H = in.horizon;
  const Real A = in.action_count;
  const Real C = in.window;
  const Real eps = in.eps;
  const Real lead = 4 * H * H * pow(A, 2 * in.window + 2) / (eps * eps);
  const Real logs =
      log(2 * H / Real(in.delta)) +
      Real(in.theta_dim) *
          log(1 + 32 * H * pow(A, in.window + 1) * C * Real(in.rho) *
                      Real(in.bound) / eps);
  const Int n = static_cast<Int>(ceil(lead * logs));
  return n.str();
}

}  // namespace epw
