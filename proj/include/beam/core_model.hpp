#pragma once

// Gaussian conjugate model: vec(Y) | Sigma ~ N(0, Sigma (x) I_n),
// Sigma ~ IW_p((delta - p - 1) D, delta). Standardization, shrinkage
// estimators, log-marginal likelihood and the empirical-Bayes choice of delta.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace beam {

/// Raised when the observation matrix cannot be analysed as given.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConstantColumnError : public InputError {
 public:
  explicit ConstantColumnError(std::size_t column);
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

class InsufficientSamplesError : public InputError {
 public:
  explicit InsufficientSamplesError(std::size_t n);
};

/// A linear-algebra step failed where the math says it cannot.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Prior expectation D of Sigma.
class PriorSpec {
 public:
  enum class Kind { identity, scaled_identity, explicit_matrix };

  static PriorSpec identity();
  static PriorSpec scaled_identity(double tau);
  /// Throws InputError unless D is symmetric positive definite.
  static PriorSpec explicit_matrix(Eigen::MatrixXd d);

  Kind kind() const noexcept { return kind_; }
  bool is_identity_kind() const noexcept { return kind_ != Kind::explicit_matrix; }
  /// Scale tau of D = tau * I (1 for the identity).
  double tau() const noexcept { return tau_; }
  /// Only populated for explicit priors.
  const Eigen::MatrixXd& matrix() const noexcept { return d_; }
  /// Materializes D; intended for tests and small p.
  Eigen::MatrixXd dense(Eigen::Index p) const;
  /// D_ij without materializing identity kinds.
  double entry(Eigen::Index i, Eigen::Index j) const;
  /// "identity", "scaled_identity(<tau>)" or "explicit".
  std::string describe() const;

 private:
  Kind kind_ = Kind::identity;
  double tau_ = 1.0;
  Eigen::MatrixXd d_;
};

/// n x p observations together with the spectrum of the Gram matrix.
class DataMatrix {
 public:
  /// Wraps Y without centering or scaling. eig_gram is still computed.
  static DataMatrix wrap(Eigen::MatrixXd y, std::vector<std::string> names = {});

  const Eigen::MatrixXd& y() const noexcept { return y_; }
  Eigen::Index n() const noexcept { return y_.rows(); }
  Eigen::Index p() const noexcept { return y_.cols(); }
  /// Eigenvalues of S = Y^T Y, non-increasing, length p.
  const std::vector<double>& eig_gram() const noexcept { return eig_gram_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  /// Variable label; falls back to V<i+1>.
  std::string name(Eigen::Index i) const;

  /// S = Y^T Y.
  Eigen::MatrixXd gram() const;
  double gram_entry(Eigen::Index i, Eigen::Index j) const;

 private:
  Eigen::MatrixXd y_;
  std::vector<double> eig_gram_;
  std::vector<std::string> names_;
};

/// Centers each column and scales it so that Y_j^T Y_j = n.
/// Throws InsufficientSamplesError when n < 3, ConstantColumnError on zero
/// variance, InputError on non-finite cells.
DataMatrix standardize(const Eigen::MatrixXd& raw, std::vector<std::string> names = {});

/// Non-increasing eigenvalues of S computed through the smaller of YY^T and Y^TY.
std::vector<double> gram_spectrum(const Eigen::MatrixXd& y);

/// log|D| and the eigenvalues e_l of D^{-1} S, everything the marginal
/// likelihood needs beyond (n, p, delta).
struct PriorSpectrum {
  double log_det_d = 0.0;
  std::vector<double> relative_eigs;
};

PriorSpectrum prior_spectrum(const DataMatrix& data, const PriorSpec& prior);

struct ModelFit {
  double delta = 0.0;
  double alpha = 0.0;
  double log_ml = 0.0;
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  PriorSpec prior;
};

/// alpha = (delta - p - 1) / (delta + n - p - 1).
double alpha_from_delta(double delta, Eigen::Index n, Eigen::Index p);
/// delta = p + 1 + alpha n / (1 - alpha).
double delta_from_alpha(double alpha, Eigen::Index n, Eigen::Index p);

/// ln p(Y; delta). Requires delta > p + 1.
double log_marginal_likelihood(const DataMatrix& data, const PriorSpec& prior, double delta);
double log_marginal_likelihood(const PriorSpectrum& spectrum, Eigen::Index n, Eigen::Index p,
                               double delta);

/// Builds a fit at a fixed delta (no optimization).
ModelFit fit_at_delta(const DataMatrix& data, const PriorSpec& prior, double delta);

struct FitOptions {
  double alpha_lower = 1e-4;
  double alpha_upper = 1.0 - 1e-4;
  int max_iterations = 200;
};

/// Empirical-Bayes delta: maximizes the log-marginal likelihood over alpha.
ModelFit fit_delta(const DataMatrix& data, const PriorSpec& prior, const FitOptions& options = {});

struct MarginalLikelihoodPoint {
  double alpha;
  double delta;
  double log_ml;
};

/// log-marginal likelihood on alpha = k / (points + 1), k = 1..points.
std::vector<MarginalLikelihoodPoint> marginal_likelihood_curve(const DataMatrix& data,
                                                               const PriorSpec& prior,
                                                               int points = 999);

/// E(Sigma | Y) = {(delta - p - 1) D + S} / (delta + n - p - 1).
Eigen::MatrixXd posterior_mean_sigma(const DataMatrix& data, const ModelFit& fit);

/// E(Omega | Y) = (delta + n) {(delta - p - 1) D + S}^{-1}.
Eigen::MatrixXd posterior_mean_omega(const DataMatrix& data, const ModelFit& fit);

}  // namespace beam
