#pragma once

// Per-pair statistics for every 1 <= i < j <= p: prior/posterior marginal and
// partial correlations, log (scaled) Bayes factors for marginal and
// conditional independence, and their exact null tail probabilities.
//
// Everything derives from two p x p objects: T = F + S with F = (delta-p-1) D,
// and T^{-1}. For a pair a = {i, j}:
//   T_aa   = [[t_ii, t_ij], [t_ij, t_jj]]             (marginal test)
//   T_aa.b = {(T^{-1})_aa}^{-1} = [[q_ii, q_ij], ...]  (conditional test)
// and likewise F_aa and F_aa.b = {(F^{-1})_aa}^{-1} = [[g_ii, g_ij], ...].

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "beam/core_model.hpp"

namespace beam {

enum class InversePath { automatic, direct, woodbury };

struct KernelOptions {
  InversePath path = InversePath::automatic;
  /// Materialize S = Y^T Y (needed by the marginal test).
  bool with_gram = true;
};

struct PrecomputedKernels {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  double delta = 0.0;
  bool identity_prior = true;
  /// (delta - p - 1) tau when D = tau I.
  double f_scalar = 0.0;
  /// Explicit priors only: F and F^{-1}.
  Eigen::MatrixXd f;
  Eigen::MatrixXd f_inv;
  Eigen::MatrixXd t_inv;
  /// Empty unless requested.
  Eigen::MatrixXd gram;
  bool used_woodbury = false;

  double f_entry(Eigen::Index i, Eigen::Index j) const {
    if (identity_prior) return i == j ? f_scalar : 0.0;
    return f(i, j);
  }
  double f_inv_entry(Eigen::Index i, Eigen::Index j) const {
    if (identity_prior) return i == j ? 1.0 / f_scalar : 0.0;
    return f_inv(i, j);
  }
};

/// Computes T^{-1} by a p x p Cholesky of F + S, or for D = tau I and n < p
/// through T^{-1} = f^{-1} (I - Y^T (f I_n + Y Y^T)^{-1} Y).
PrecomputedKernels precompute_kernels(const DataMatrix& data, const ModelFit& fit,
                                      const KernelOptions& options = {});

struct MarginalStats {
  double r_prior = 0.0;  // r_f
  double r_post = 0.0;   // r_t
  double f_ii = 0.0, f_jj = 0.0, f_ij = 0.0;
  double t_ii = 0.0, t_jj = 0.0, t_ij = 0.0;
  double s_ii = 0.0, s_jj = 0.0, s_ij = 0.0;
};

struct ConditionalStats {
  double r_prior = 0.0;  // r_g
  double r_post = 0.0;   // r_q
  double g_ii = 0.0, g_jj = 0.0, g_ij = 0.0;
  double q_ii = 0.0, q_jj = 0.0, q_ij = 0.0;
};

/// Requires kernels built with the Gram matrix, or falls back to O(n) dot products.
MarginalStats pair_marginal_stats(const PrecomputedKernels& kernels, const DataMatrix& data,
                                  Eigen::Index i, Eigen::Index j);
ConditionalStats pair_conditional_stats(const PrecomputedKernels& kernels, Eigen::Index i,
                                        Eigen::Index j);

/// The Gamma-function constants of the four Bayes factors for fixed (delta, n, p).
struct BayesFactorConstants {
  double marginal = 0.0;
  double conditional = 0.0;
  double marginal_prior_exponent = 0.0;  // (delta - p + 2) / 2
  double marginal_post_exponent = 0.0;   // (delta + n - p + 2) / 2
  double conditional_prior_exponent = 0.0;  // delta / 2
  double conditional_post_exponent = 0.0;   // (delta + n) / 2
};

BayesFactorConstants bayes_factor_constants(double delta, Eigen::Index n, Eigen::Index p);

/// |r| within this distance of 1 is treated as perfect correlation.
inline constexpr double kDegenerateCorrelation = 1e-12;

/// Log scaled Bayes factors return +infinity for degenerate pairs.
double log_sbf_marginal(const MarginalStats& stats, const ModelFit& fit);
double log_bf_marginal(const MarginalStats& stats, const ModelFit& fit);
double log_sbf_conditional(const ConditionalStats& stats, const ModelFit& fit);
double log_bf_conditional(const ConditionalStats& stats, const ModelFit& fit);

/// Beta(1/2, (n-1)/2) upper tail at the squared sample correlation r_s^2.
double tail_prob_marginal(const MarginalStats& stats, Eigen::Index n);
/// Beta(1/2, (n-1)/2) upper tail at r_z^2 where Z = T_aa.b - F_aa.b.
double tail_prob_conditional(const ConditionalStats& stats, Eigen::Index n);

enum PairFlag : std::uint8_t {
  kFlagNone = 0,
  kFlagDegenerateMarginal = 1,
  kFlagDegenerateConditional = 2,
};

struct PairStat {
  std::int32_t i = 0;
  std::int32_t j = 0;
  double r_t = 0.0;  // posterior marginal correlation
  double r_f = 0.0;  // prior marginal correlation
  double r_q = 0.0;  // posterior partial correlation
  double r_g = 0.0;  // prior partial correlation
  double log_sbf_m = 0.0;
  double log_sbf_c = 0.0;
  double tail_m = 0.0;
  double tail_c = 0.0;
  std::uint8_t flags = kFlagNone;
};

struct TestSelection {
  bool marginal = true;
  bool conditional = true;
};

/// Number of pairs p(p-1)/2.
std::size_t pair_count(Eigen::Index p);
/// Row-major index of (i, j), 0-based, i < j: k = i (2p - i - 1) / 2 + (j - i - 1).
std::size_t pair_index(Eigen::Index i, Eigen::Index j, Eigen::Index p);
/// Inverse of pair_index.
std::pair<Eigen::Index, Eigen::Index> pair_from_index(std::size_t k, Eigen::Index p);

/// Computes PairStats over contiguous pair-index ranges from shared read-only
/// kernels. Fields of unselected tests are NaN.
class PairSweeper {
 public:
  PairSweeper(const DataMatrix& data, const ModelFit& fit, const PrecomputedKernels& kernels,
              TestSelection tests = {});

  PairStat compute(Eigen::Index i, Eigen::Index j) const;
  /// Fills out[k - begin] for k in [begin, begin + out.size()).
  void compute_range(std::size_t begin, std::span<PairStat> out) const;
  /// Parallel sweep over [begin, end) into out; output is independent of thread count.
  void compute_parallel(std::size_t begin, std::span<PairStat> out, int threads) const;

  std::size_t size() const noexcept { return pair_count(data_.p()); }

 private:
  const DataMatrix& data_;
  const ModelFit& fit_;
  const PrecomputedKernels& kernels_;
  TestSelection tests_;
  BayesFactorConstants constants_;
};

struct PairTable {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  double delta = 0.0;
  TestSelection tests;
  std::vector<PairStat> pairs;

  const PairStat& at(Eigen::Index i, Eigen::Index j) const { return pairs[pair_index(i, j, p)]; }
  std::size_t flagged_count() const;
};

struct SweepOptions {
  TestSelection tests;
  InversePath path = InversePath::automatic;
  /// 0 selects the OpenMP default.
  int threads = 0;
};

PairTable compute_all_pairs(const DataMatrix& data, const ModelFit& fit,
                            const SweepOptions& options = {});

}  // namespace beam
