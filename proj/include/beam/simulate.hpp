#pragma once

// Simulation machinery: structured sparse precision matrices, Gaussian
// sampling, ROC/PR scoring of pair rankings and the replicate benchmark.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace beam {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Structure { band, cluster, hub, random };

std::string_view to_string(Structure s);
std::optional<Structure> parse_structure(std::string_view name);

struct SimScenario {
  Structure structure = Structure::band;
  int p = 200;
  int n = 100;
  std::uint64_t seed = 1;
  int block_size = 20;
  double cluster_edge_prob = 0.1;
  double min_eigen = 0.1;

  /// Throws ConfigError.
  void validate() const;
};

using EdgeList = std::vector<std::pair<std::int32_t, std::int32_t>>;

struct GroundTruth {
  Eigen::MatrixXd psi;
  /// (i, j), i < j, 0-based, ascending.
  EdgeList true_edges;
};

/// Sparse precision matrix with Uniform[-1, 1] off-diagonal weights on the
/// structure's support and a zero diagonal, then shifted by
/// (min_eigen - lambda_min) I wherever lambda_min < min_eigen. Cluster and hub
/// matrices are shifted per diagonal block, band and random as a whole.
GroundTruth gen_precision(const SimScenario& scenario);

/// n rows i.i.d. N(0, Psi^{-1}): x solves L^T x = z with Psi = L L^T.
Eigen::MatrixXd sample_mvn(int n, const GroundTruth& truth, std::uint64_t seed);

/// Per-pair 0/1 labels in pair-index order.
std::vector<std::uint8_t> edge_labels(const EdgeList& edges, Eigen::Index p);

/// P(score of a random edge > score of a random non-edge), ties counted 1/2.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);
/// Average precision: sum over tie groups of (recall gain) x (precision at the group).
double pr_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct EvalResult {
  double auc_roc = 0.0;
  double auc_pr = 0.0;
  double runtime_seconds = 0.0;
};

struct BenchmarkSummary {
  SimScenario scenario;
  std::vector<EvalResult> replicates;
  double mean_roc = 0.0, sd_roc = 0.0;
  double mean_pr = 0.0, sd_pr = 0.0;
  double mean_runtime = 0.0;
};

/// Seeds used by replicate r: truth from seed + r, data from derive_seed(seed + r, 1).
SimScenario replicate_scenario(const SimScenario& base, int replicate);
std::uint64_t replicate_sample_seed(const SimScenario& base, int replicate);

/// One replicate: generate truth, sample, standardize, fit delta, sweep the
/// conditional test and score pairs by negated tail probability. Timing covers
/// the inference steps only.
EvalResult run_replicate(const SimScenario& base, int replicate, int threads = 1);

/// Sample mean and (n-1) standard deviation; sd is 0 for a single replicate.
BenchmarkSummary summarize(const SimScenario& scenario, std::vector<EvalResult> results);

BenchmarkSummary run_benchmark(const SimScenario& scenario, int replicates, int threads = 1);

}  // namespace beam
