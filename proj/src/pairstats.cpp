#include "beam/pairstats.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>

#include <omp.h>

#include "beam/mathfn.hpp"

namespace beam {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kBlockSize = 4096;

bool is_degenerate(double r) { return std::abs(r) >= 1.0 - kDegenerateCorrelation; }

double clamp_correlation(double r) { return std::clamp(r, -1.0, 1.0); }

// Inverse of the 2 x 2 block [[a, c], [c, b]] of an SPD matrix.
struct Block2 {
  double ii, jj, ij;
};

Block2 invert_block(double a, double b, double c, const char* what) {
  const double det = a * b - c * c;
  if (!(det > 0.0)) throw NumericalError(std::string("non-positive 2x2 determinant in ") + what);
  return {b / det, a / det, -c / det};
}

double null_tail(double r, Eigen::Index n) {
  const double r2 = std::min(1.0, r * r);
  return beta_upper_tail(r2, 0.5, 0.5 * static_cast<double>(n - 1));
}

double sbf_marginal(const BayesFactorConstants& k, double r_prior, double r_post) {
  if (is_degenerate(r_post)) return kInf;
  return k.marginal + k.marginal_prior_exponent * std::log1p(-r_prior * r_prior) -
         k.marginal_post_exponent * std::log1p(-r_post * r_post);
}

double sbf_conditional(const BayesFactorConstants& k, double r_prior, double r_post) {
  if (is_degenerate(r_post)) return kInf;
  return k.conditional + k.conditional_prior_exponent * std::log1p(-r_prior * r_prior) -
         k.conditional_post_exponent * std::log1p(-r_post * r_post);
}

double r_z_of(const ConditionalStats& s) {
  const double z_ii = s.q_ii - s.g_ii;
  const double z_jj = s.q_jj - s.g_jj;
  if (!(z_ii > 0.0) || !(z_jj > 0.0)) {
    throw NumericalError("residual scatter Z has a non-positive diagonal entry");
  }
  return clamp_correlation((s.q_ij - s.g_ij) / std::sqrt(z_ii * z_jj));
}

double r_s_of(const MarginalStats& s) {
  return clamp_correlation(s.s_ij / std::sqrt(s.s_ii * s.s_jj));
}

}  // namespace

// ---------------------------------------------------------------------------
// Kernels

PrecomputedKernels precompute_kernels(const DataMatrix& data, const ModelFit& fit,
                                      const KernelOptions& options) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const double excess = fit.delta - static_cast<double>(p) - 1.0;
  if (!(excess > 0.0)) throw DomainError("precompute_kernels: delta must exceed p + 1");

  PrecomputedKernels k;
  k.n = n;
  k.p = p;
  k.delta = fit.delta;
  k.identity_prior = fit.prior.is_identity_kind();

  bool woodbury = false;
  switch (options.path) {
    case InversePath::automatic:
      woodbury = k.identity_prior && n < p;
      break;
    case InversePath::direct:
      woodbury = false;
      break;
    case InversePath::woodbury:
      if (!k.identity_prior) throw InputError("the Woodbury path requires D = tau I");
      woodbury = true;
      break;
  }
  k.used_woodbury = woodbury;

  if (k.identity_prior) {
    k.f_scalar = excess * fit.prior.tau();
  } else {
    if (fit.prior.matrix().rows() != p) throw InputError("prior matrix dimension does not match the data");
    k.f = excess * fit.prior.matrix();
    Eigen::LLT<Eigen::MatrixXd> llt_d(fit.prior.matrix());
    k.f_inv = llt_d.solve(Eigen::MatrixXd::Identity(p, p)) / excess;
    k.f_inv = 0.5 * (k.f_inv + k.f_inv.transpose()).eval();
  }

  const Eigen::MatrixXd& y = data.y();
  if (woodbury) {
    const double f = k.f_scalar;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    m.selfadjointView<Eigen::Lower>().rankUpdate(y);
    m.diagonal().array() += f;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw NumericalError("Cholesky of f I + Y Y^T failed");
    const Eigen::MatrixXd w = llt.matrixL().solve(y);  // n x p
    k.t_inv = Eigen::MatrixXd::Zero(p, p);
    k.t_inv.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose(), -1.0);
    k.t_inv.diagonal().array() += 1.0;
    k.t_inv.triangularView<Eigen::StrictlyUpper>() = k.t_inv.transpose();
    k.t_inv /= f;
    if (options.with_gram) k.gram = data.gram();
  } else {
    Eigen::MatrixXd t = data.gram();
    if (options.with_gram) k.gram = t;
    if (k.identity_prior) {
      t.diagonal().array() += k.f_scalar;
    } else {
      t += k.f;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(t);
    if (llt.info() != Eigen::Success) throw NumericalError("Cholesky of F + S failed");
    k.t_inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
    k.t_inv = 0.5 * (k.t_inv + k.t_inv.transpose()).eval();
  }
  return k;
}

// ---------------------------------------------------------------------------
// Pair quantities

MarginalStats pair_marginal_stats(const PrecomputedKernels& kernels, const DataMatrix& data,
                                  Eigen::Index i, Eigen::Index j) {
  MarginalStats s;
  if (kernels.gram.size() > 0) {
    s.s_ii = kernels.gram(i, i);
    s.s_jj = kernels.gram(j, j);
    s.s_ij = kernels.gram(i, j);
  } else {
    s.s_ii = data.gram_entry(i, i);
    s.s_jj = data.gram_entry(j, j);
    s.s_ij = data.gram_entry(i, j);
  }
  s.f_ii = kernels.f_entry(i, i);
  s.f_jj = kernels.f_entry(j, j);
  s.f_ij = kernels.f_entry(i, j);
  s.t_ii = s.f_ii + s.s_ii;
  s.t_jj = s.f_jj + s.s_jj;
  s.t_ij = s.f_ij + s.s_ij;
  s.r_prior = clamp_correlation(s.f_ij / std::sqrt(s.f_ii * s.f_jj));
  s.r_post = clamp_correlation(s.t_ij / std::sqrt(s.t_ii * s.t_jj));
  return s;
}

ConditionalStats pair_conditional_stats(const PrecomputedKernels& kernels, Eigen::Index i,
                                        Eigen::Index j) {
  ConditionalStats s;
  const double m_ii = kernels.t_inv(i, i);
  const double m_jj = kernels.t_inv(j, j);
  const double m_ij = kernels.t_inv(i, j);
  const Block2 q = invert_block(m_ii, m_jj, m_ij, "(T^{-1})_aa");
  s.q_ii = q.ii;
  s.q_jj = q.jj;
  s.q_ij = q.ij;
  s.r_post = clamp_correlation(-m_ij / std::sqrt(m_ii * m_jj));
  if (kernels.identity_prior) {
    s.g_ii = kernels.f_scalar;
    s.g_jj = kernels.f_scalar;
    s.g_ij = 0.0;
    s.r_prior = 0.0;
  } else {
    const double a = kernels.f_inv(i, i);
    const double b = kernels.f_inv(j, j);
    const double c = kernels.f_inv(i, j);
    const Block2 g = invert_block(a, b, c, "(F^{-1})_aa");
    s.g_ii = g.ii;
    s.g_jj = g.jj;
    s.g_ij = g.ij;
    s.r_prior = clamp_correlation(-c / std::sqrt(a * b));
  }
  return s;
}

BayesFactorConstants bayes_factor_constants(double delta, Eigen::Index n, Eigen::Index p) {
  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);
  if (!(delta > pd + 1.0)) throw DomainError("Bayes factor: delta must exceed p + 1");
  BayesFactorConstants k;
  k.marginal = log_multigamma(2, 0.5 * (delta + nd - pd + 2.0)) +
               2.0 * log_gamma(0.5 * (delta - pd + 3.0)) -
               log_multigamma(2, 0.5 * (delta - pd + 2.0)) -
               2.0 * log_gamma(0.5 * (delta + nd - pd + 3.0));
  k.conditional = log_gamma(0.5 * (delta + nd)) + log_gamma(0.5 * (delta + nd - 1.0)) +
                  2.0 * log_gamma(0.5 * (delta + 1.0)) - log_gamma(0.5 * delta) -
                  log_gamma(0.5 * (delta - 1.0)) - 2.0 * log_gamma(0.5 * (delta + nd + 1.0));
  k.marginal_prior_exponent = 0.5 * (delta - pd + 2.0);
  k.marginal_post_exponent = 0.5 * (delta + nd - pd + 2.0);
  k.conditional_prior_exponent = 0.5 * delta;
  k.conditional_post_exponent = 0.5 * (delta + nd);
  return k;
}

double log_sbf_marginal(const MarginalStats& stats, const ModelFit& fit) {
  return sbf_marginal(bayes_factor_constants(fit.delta, fit.n, fit.p), stats.r_prior, stats.r_post);
}

double log_bf_marginal(const MarginalStats& stats, const ModelFit& fit) {
  return log_sbf_marginal(stats, fit) +
         0.5 * std::log((stats.t_ii * stats.t_jj) / (stats.f_ii * stats.f_jj));
}

double log_sbf_conditional(const ConditionalStats& stats, const ModelFit& fit) {
  return sbf_conditional(bayes_factor_constants(fit.delta, fit.n, fit.p), stats.r_prior,
                         stats.r_post);
}

// Posterior over prior partial variances, the same orientation as the marginal
// factor; this is what integrating the regression model under both hypotheses gives.
double log_bf_conditional(const ConditionalStats& stats, const ModelFit& fit) {
  return log_sbf_conditional(stats, fit) +
         0.5 * std::log((stats.q_ii * stats.q_jj) / (stats.g_ii * stats.g_jj));
}

double tail_prob_marginal(const MarginalStats& stats, Eigen::Index n) {
  if (n < 2) throw DomainError("tail probability requires n >= 2");
  return null_tail(r_s_of(stats), n);
}

double tail_prob_conditional(const ConditionalStats& stats, Eigen::Index n) {
  if (n < 2) throw DomainError("tail probability requires n >= 2");
  return null_tail(r_z_of(stats), n);
}

// ---------------------------------------------------------------------------
// Indexing

std::size_t pair_count(Eigen::Index p) {
  const auto pp = static_cast<std::size_t>(p);
  return pp < 2 ? 0 : pp * (pp - 1) / 2;
}

std::size_t pair_index(Eigen::Index i, Eigen::Index j, Eigen::Index p) {
  const auto ii = static_cast<std::size_t>(i);
  const auto jj = static_cast<std::size_t>(j);
  const auto pp = static_cast<std::size_t>(p);
  return ii * (2 * pp - ii - 1) / 2 + (jj - ii - 1);
}

std::pair<Eigen::Index, Eigen::Index> pair_from_index(std::size_t k, Eigen::Index p) {
  // Row i starts at i(2p - i - 1)/2; solve the quadratic, then correct rounding.
  const double pd = static_cast<double>(p);
  const double disc = (2.0 * pd - 1.0) * (2.0 * pd - 1.0) - 8.0 * static_cast<double>(k);
  auto i = static_cast<Eigen::Index>(std::floor(((2.0 * pd - 1.0) - std::sqrt(std::max(0.0, disc))) / 2.0));
  i = std::clamp<Eigen::Index>(i, 0, p - 2);
  auto row_start = [p](Eigen::Index r) {
    return static_cast<std::size_t>(r) * (2 * static_cast<std::size_t>(p) - static_cast<std::size_t>(r) - 1) / 2;
  };
  while (i > 0 && row_start(i) > k) --i;
  while (i + 1 < p - 1 && row_start(i + 1) <= k) ++i;
  const auto j = static_cast<Eigen::Index>(k - row_start(i)) + i + 1;
  return {i, j};
}

// ---------------------------------------------------------------------------
// Sweep

PairSweeper::PairSweeper(const DataMatrix& data, const ModelFit& fit,
                         const PrecomputedKernels& kernels, TestSelection tests)
    : data_(data),
      fit_(fit),
      kernels_(kernels),
      tests_(tests),
      constants_(bayes_factor_constants(fit.delta, data.n(), data.p())) {}

PairStat PairSweeper::compute(Eigen::Index i, Eigen::Index j) const {
  PairStat out;
  out.i = static_cast<std::int32_t>(i);
  out.j = static_cast<std::int32_t>(j);
  const Eigen::Index n = data_.n();

  if (tests_.marginal) {
    const MarginalStats m = pair_marginal_stats(kernels_, data_, i, j);
    const double r_s = r_s_of(m);
    out.r_t = m.r_post;
    out.r_f = m.r_prior;
    out.log_sbf_m = sbf_marginal(constants_, m.r_prior, m.r_post);
    out.tail_m = null_tail(r_s, n);
    if (is_degenerate(m.r_post) || is_degenerate(r_s)) out.flags |= kFlagDegenerateMarginal;
  } else {
    out.r_t = out.r_f = out.log_sbf_m = out.tail_m = kNaN;
  }

  if (tests_.conditional) {
    const ConditionalStats c = pair_conditional_stats(kernels_, i, j);
    out.r_q = c.r_post;
    out.r_g = c.r_prior;
    out.log_sbf_c = sbf_conditional(constants_, c.r_prior, c.r_post);
    try {
      const double r_z = r_z_of(c);
      out.tail_c = null_tail(r_z, n);
      if (is_degenerate(r_z)) out.flags |= kFlagDegenerateConditional;
    } catch (const NumericalError&) {
      out.tail_c = 1.0;
      out.flags |= kFlagDegenerateConditional;
    }
    if (is_degenerate(c.r_post)) out.flags |= kFlagDegenerateConditional;
  } else {
    out.r_q = out.r_g = out.log_sbf_c = out.tail_c = kNaN;
  }
  return out;
}

void PairSweeper::compute_range(std::size_t begin, std::span<PairStat> out) const {
  if (out.empty()) return;
  const Eigen::Index p = data_.p();
  auto [i, j] = pair_from_index(begin, p);
  for (PairStat& slot : out) {
    slot = compute(i, j);
    if (++j == p) {
      ++i;
      j = i + 1;
    }
  }
}

void PairSweeper::compute_parallel(std::size_t begin, std::span<PairStat> out, int threads) const {
  const std::size_t total = out.size();
  const std::size_t blocks = (total + kBlockSize - 1) / kBlockSize;
  const int workers = threads > 0 ? threads : omp_get_max_threads();
  std::exception_ptr failure;
  std::mutex failure_mutex;

#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlockSize;
    const std::size_t len = std::min(kBlockSize, total - lo);
    try {
      compute_range(begin + lo, out.subspan(lo, len));
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

std::size_t PairTable::flagged_count() const {
  return static_cast<std::size_t>(std::count_if(
      pairs.begin(), pairs.end(), [](const PairStat& s) { return s.flags != kFlagNone; }));
}

PairTable compute_all_pairs(const DataMatrix& data, const ModelFit& fit,
                            const SweepOptions& options) {
  KernelOptions kernel_options;
  kernel_options.path = options.path;
  kernel_options.with_gram = options.tests.marginal;
  const PrecomputedKernels kernels = precompute_kernels(data, fit, kernel_options);

  PairTable table;
  table.n = data.n();
  table.p = data.p();
  table.delta = fit.delta;
  table.tests = options.tests;
  table.pairs.resize(pair_count(data.p()));
  const PairSweeper sweeper(data, fit, kernels, options.tests);
  sweeper.compute_parallel(0, table.pairs, options.threads);
  return table;
}

}  // namespace beam
