#include "beam/mathfn.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/policies/policy.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace beam {

namespace {

// Evaluate in double throughout; report errors as exceptions, never errno.
using Policy = boost::math::policies::policy<
    boost::math::policies::promote_double<false>,
    boost::math::policies::domain_error<boost::math::policies::throw_on_error>,
    boost::math::policies::overflow_error<boost::math::policies::throw_on_error>>;

void check_unit_interval(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("beta tail: x must lie in [0, 1], got " + std::to_string(x));
  }
}

void check_shapes(double a, double b) {
  if (!(a > 0.0 && std::isfinite(a)) || !(b > 0.0 && std::isfinite(b))) {
    throw DomainError("beta tail: shape parameters must be positive and finite");
  }
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("log_gamma: argument must be positive and finite, got " +
                      std::to_string(x));
  }
  return boost::math::lgamma(x, Policy());
}

double log_multigamma(int d, double x) {
  if (d < 1) throw DomainError("log_multigamma: dimension must be positive");
  if (!(x + 0.5 * (1 - d) > 0.0) || !std::isfinite(x)) {
    throw DomainError("log_multigamma: x + (1 - d)/2 must be positive");
  }
  double acc = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
  for (int i = 1; i <= d; ++i) acc += log_gamma(x + 0.5 * (1 - i));
  return acc;
}

double beta_cdf(double x, double a, double b) {
  check_unit_interval(x);
  check_shapes(a, b);
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  return boost::math::ibeta(a, b, x, Policy());
}

double beta_upper_tail(double x, double a, double b) {
  check_unit_interval(x);
  check_shapes(a, b);
  if (x == 0.0) return 1.0;
  if (x == 1.0) return 0.0;
  return boost::math::ibetac(a, b, x, Policy());
}

}  // namespace beam
