#include "beam/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <utility>

#include <boost/math/tools/minima.hpp>

#include "beam/mathfn.hpp"
#include "beam/pairstats.hpp"

namespace beam {

ConstantColumnError::ConstantColumnError(std::size_t column)
    : InputError("column " + std::to_string(column + 1) + " has zero variance"),
      column_(column) {}

InsufficientSamplesError::InsufficientSamplesError(std::size_t n)
    : InputError("at least 3 observations are required, got " + std::to_string(n)) {}

// ---------------------------------------------------------------------------
// PriorSpec

PriorSpec PriorSpec::identity() { return PriorSpec{}; }

PriorSpec PriorSpec::scaled_identity(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw InputError("prior scale tau must be positive and finite");
  }
  PriorSpec out;
  out.kind_ = Kind::scaled_identity;
  out.tau_ = tau;
  return out;
}

PriorSpec PriorSpec::explicit_matrix(Eigen::MatrixXd d) {
  if (d.rows() != d.cols() || d.rows() == 0) throw InputError("prior matrix must be square");
  if (!d.allFinite()) throw InputError("prior matrix has non-finite entries");
  const double scale = d.cwiseAbs().maxCoeff();
  if ((d - d.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, scale)) {
    throw InputError("prior matrix must be symmetric");
  }
  d = 0.5 * (d + d.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(d);
  if (llt.info() != Eigen::Success) throw InputError("prior matrix must be positive definite");
  PriorSpec out;
  out.kind_ = Kind::explicit_matrix;
  out.d_ = std::move(d);
  return out;
}

Eigen::MatrixXd PriorSpec::dense(Eigen::Index p) const {
  if (kind_ == Kind::explicit_matrix) return d_;
  return tau_ * Eigen::MatrixXd::Identity(p, p);
}

double PriorSpec::entry(Eigen::Index i, Eigen::Index j) const {
  if (kind_ == Kind::explicit_matrix) return d_(i, j);
  return i == j ? tau_ : 0.0;
}

std::string PriorSpec::describe() const {
  switch (kind_) {
    case Kind::identity:
      return "identity";
    case Kind::scaled_identity: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "scaled_identity(%.17g)", tau_);
      return buf;
    }
    case Kind::explicit_matrix:
      return "explicit";
  }
  return "identity";
}

// ---------------------------------------------------------------------------
// DataMatrix

std::vector<double> gram_spectrum(const Eigen::MatrixXd& y) {
  const Eigen::Index n = y.rows();
  const Eigen::Index p = y.cols();
  // YY^T and Y^TY share their non-zero spectrum.
  Eigen::MatrixXd small;
  if (n < p) {
    small = Eigen::MatrixXd::Zero(n, n);
    small.selfadjointView<Eigen::Lower>().rankUpdate(y);
  } else {
    small = Eigen::MatrixXd::Zero(p, p);
    small.selfadjointView<Eigen::Lower>().rankUpdate(y.transpose());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(small, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition of the Gram matrix failed");
  std::vector<double> eig(static_cast<std::size_t>(p), 0.0);
  const Eigen::VectorXd& values = solver.eigenvalues();
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    eig[static_cast<std::size_t>(k)] = std::max(0.0, values(k));
  }
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

DataMatrix DataMatrix::wrap(Eigen::MatrixXd y, std::vector<std::string> names) {
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != y.cols()) {
    throw InputError("number of column names does not match the number of variables");
  }
  DataMatrix out;
  out.eig_gram_ = gram_spectrum(y);
  out.y_ = std::move(y);
  out.names_ = std::move(names);
  return out;
}

std::string DataMatrix::name(Eigen::Index i) const {
  if (!names_.empty()) return names_[static_cast<std::size_t>(i)];
  return "V" + std::to_string(i + 1);
}

Eigen::MatrixXd DataMatrix::gram() const {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p(), p());
  s.selfadjointView<Eigen::Lower>().rankUpdate(y_.transpose());
  s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return s;
}

double DataMatrix::gram_entry(Eigen::Index i, Eigen::Index j) const {
  return y_.col(i).dot(y_.col(j));
}

DataMatrix standardize(const Eigen::MatrixXd& raw, std::vector<std::string> names) {
  const Eigen::Index n = raw.rows();
  const Eigen::Index p = raw.cols();
  if (n < 3) throw InsufficientSamplesError(static_cast<std::size_t>(n));
  if (p < 1) throw InputError("at least one variable is required");
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isfinite(raw(i, j))) {
        throw InputError("non-finite value at row " + std::to_string(i + 1) + ", column " +
                         std::to_string(j + 1));
      }
    }
  }
  Eigen::MatrixXd y(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = raw.col(j).mean();
    y.col(j) = raw.col(j).array() - mean;
    const double ss = y.col(j).squaredNorm();
    const double scale = raw.col(j).cwiseAbs().maxCoeff();
    if (!(ss > 0.0) || std::sqrt(ss / n) <= 1e-13 * scale) {
      throw ConstantColumnError(static_cast<std::size_t>(j));
    }
    y.col(j) *= std::sqrt(static_cast<double>(n) / ss);
  }
  return DataMatrix::wrap(std::move(y), std::move(names));
}

// ---------------------------------------------------------------------------
// Marginal likelihood

PriorSpectrum prior_spectrum(const DataMatrix& data, const PriorSpec& prior) {
  PriorSpectrum out;
  const Eigen::Index p = data.p();
  if (prior.is_identity_kind()) {
    out.log_det_d = static_cast<double>(p) * std::log(prior.tau());
    out.relative_eigs = data.eig_gram();
    for (double& e : out.relative_eigs) e /= prior.tau();
    return out;
  }
  if (prior.matrix().rows() != p) throw InputError("prior matrix dimension does not match the data");
  // D = LL^T; the spectrum of D^{-1}S equals that of L^{-1} S L^{-T} = W^T W, W = Y L^{-T}.
  Eigen::LLT<Eigen::MatrixXd> llt(prior.matrix());
  const Eigen::MatrixXd l = llt.matrixL();
  out.log_det_d = 2.0 * l.diagonal().array().log().sum();
  Eigen::MatrixXd w_t = llt.matrixL().solve(data.y().transpose());
  out.relative_eigs = gram_spectrum(w_t.transpose());
  return out;
}

double alpha_from_delta(double delta, Eigen::Index n, Eigen::Index p) {
  const double excess = delta - static_cast<double>(p) - 1.0;
  return excess / (excess + static_cast<double>(n));
}

double delta_from_alpha(double alpha, Eigen::Index n, Eigen::Index p) {
  return static_cast<double>(p) + 1.0 + alpha * static_cast<double>(n) / (1.0 - alpha);
}

double log_marginal_likelihood(const PriorSpectrum& spectrum, Eigen::Index n, Eigen::Index p,
                               double delta) {
  const double pd = static_cast<double>(p);
  const double nd = static_cast<double>(n);
  if (!(delta > pd + 1.0) || !std::isfinite(delta)) {
    throw DomainError("log_marginal_likelihood: delta must exceed p + 1");
  }
  const double excess = delta - pd - 1.0;

  // ln Gamma_p((delta + n)/2) - ln Gamma_p(delta/2); the pi terms cancel and the
  // difference is accumulated termwise to avoid cancellation for large p.
  double gamma_ratio = 0.0;
  for (Eigen::Index i = 1; i <= p; ++i) {
    const double shift = 0.5 * (1.0 - static_cast<double>(i));
    gamma_ratio += log_gamma(0.5 * (delta + nd) + shift) - log_gamma(0.5 * delta + shift);
  }

  double log_det_post = spectrum.log_det_d;
  for (double e : spectrum.relative_eigs) log_det_post += std::log(excess + e);
  const double log_det_prior = pd * std::log(excess) + spectrum.log_det_d;

  return -0.5 * nd * pd * std::log(std::numbers::pi) + gamma_ratio + 0.5 * delta * log_det_prior -
         0.5 * (delta + nd) * log_det_post;
}

double log_marginal_likelihood(const DataMatrix& data, const PriorSpec& prior, double delta) {
  return log_marginal_likelihood(prior_spectrum(data, prior), data.n(), data.p(), delta);
}

ModelFit fit_at_delta(const DataMatrix& data, const PriorSpec& prior, double delta) {
  ModelFit fit;
  fit.n = data.n();
  fit.p = data.p();
  fit.delta = delta;
  fit.alpha = alpha_from_delta(delta, data.n(), data.p());
  fit.log_ml = log_marginal_likelihood(data, prior, delta);
  fit.prior = prior;
  return fit;
}

ModelFit fit_delta(const DataMatrix& data, const PriorSpec& prior, const FitOptions& options) {
  const PriorSpectrum spectrum = prior_spectrum(data, prior);
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  auto objective = [&](double alpha) {
    return log_marginal_likelihood(spectrum, n, p, delta_from_alpha(alpha, n, p));
  };

  // 27 bits gives a bracket tolerance of about 1.5e-8 relative to alpha.
  std::uintmax_t iterations = static_cast<std::uintmax_t>(options.max_iterations);
  const auto [best_alpha, best_neg] = boost::math::tools::brent_find_minima(
      [&](double a) { return -objective(a); }, options.alpha_lower, options.alpha_upper, 27,
      iterations);
  double alpha = best_alpha;
  double value = -best_neg;
  // Brent never evaluates the bracket ends; the optimum may sit on one of them.
  for (double end : {options.alpha_lower, options.alpha_upper}) {
    const double v = objective(end);
    if (v > value) {
      value = v;
      alpha = end;
    }
  }

  ModelFit fit;
  fit.n = n;
  fit.p = p;
  fit.alpha = alpha;
  fit.delta = delta_from_alpha(alpha, n, p);
  fit.log_ml = value;
  fit.prior = prior;
  return fit;
}

std::vector<MarginalLikelihoodPoint> marginal_likelihood_curve(const DataMatrix& data,
                                                               const PriorSpec& prior,
                                                               int points) {
  const PriorSpectrum spectrum = prior_spectrum(data, prior);
  std::vector<MarginalLikelihoodPoint> curve;
  curve.reserve(static_cast<std::size_t>(points));
  for (int k = 1; k <= points; ++k) {
    const double alpha = static_cast<double>(k) / static_cast<double>(points + 1);
    const double delta = delta_from_alpha(alpha, data.n(), data.p());
    curve.push_back({alpha, delta, log_marginal_likelihood(spectrum, data.n(), data.p(), delta)});
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Posterior expectations

Eigen::MatrixXd posterior_mean_sigma(const DataMatrix& data, const ModelFit& fit) {
  const double pd = static_cast<double>(data.p());
  const double excess = fit.delta - pd - 1.0;
  Eigen::MatrixXd out = data.gram();
  if (fit.prior.is_identity_kind()) {
    out.diagonal().array() += excess * fit.prior.tau();
  } else {
    out += excess * fit.prior.matrix();
  }
  return out / (fit.delta + static_cast<double>(data.n()) - pd - 1.0);
}

Eigen::MatrixXd posterior_mean_omega(const DataMatrix& data, const ModelFit& fit) {
  KernelOptions options;
  options.with_gram = false;
  const PrecomputedKernels kernels = precompute_kernels(data, fit, options);
  return (fit.delta + static_cast<double>(data.n())) * kernels.t_inv;
}

}  // namespace beam
