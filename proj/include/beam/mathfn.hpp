#pragma once

// Special functions used by the Bayes-factor and tail-probability formulas.
// Everything downstream works in log space; Gamma((delta + n) / 2) overflows
// long before the dimensions this library is meant for.

#include <stdexcept>
#include <string>

namespace beam {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// ln Gamma(x) for x > 0.
double log_gamma(double x);

/// ln Gamma_d(x) = d(d-1)/4 ln(pi) + sum_{i=1..d} ln Gamma(x + (1 - i) / 2).
/// Requires x + (1 - d) / 2 > 0.
double log_multigamma(int d, double x);

/// Regularized incomplete beta I_x(a, b).
double beta_cdf(double x, double a, double b);

/// 1 - I_x(a, b), evaluated directly so small tails keep their relative accuracy.
double beta_upper_tail(double x, double a, double b);

}  // namespace beam
