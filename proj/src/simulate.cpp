#include "beam/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "beam/core_model.hpp"
#include "beam/mathfn.hpp"
#include "beam/pairstats.hpp"
#include "beam/rng.hpp"

namespace beam {

std::string_view to_string(Structure s) {
  switch (s) {
    case Structure::band: return "band";
    case Structure::cluster: return "cluster";
    case Structure::hub: return "hub";
    case Structure::random: return "random";
  }
  return "band";
}

std::optional<Structure> parse_structure(std::string_view name) {
  if (name == "band") return Structure::band;
  if (name == "cluster") return Structure::cluster;
  if (name == "hub") return Structure::hub;
  if (name == "random") return Structure::random;
  return std::nullopt;
}

void SimScenario::validate() const {
  if (p < 2) throw ConfigError("p must be at least 2");
  if (n < 3) throw ConfigError("n must be at least 3");
  if (!(min_eigen > 0.0) || !std::isfinite(min_eigen)) throw ConfigError("min-eigen must be positive");
  if (structure == Structure::cluster || structure == Structure::hub) {
    if (block_size < 2) throw ConfigError("block size must be at least 2");
    if (p % block_size != 0) {
      throw ConfigError("p = " + std::to_string(p) + " is not divisible by block size " +
                        std::to_string(block_size));
    }
  }
  if (structure == Structure::cluster && !(cluster_edge_prob >= 0.0 && cluster_edge_prob <= 1.0)) {
    throw ConfigError("cluster edge probability must lie in [0, 1]");
  }
}

namespace {

void set_symmetric(Eigen::MatrixXd& m, Eigen::Index i, Eigen::Index j, double w) {
  m(i, j) = w;
  m(j, i) = w;
}

Eigen::MatrixXd band_weights(int p, Rng& rng) {
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i + 1 < p; ++i) set_symmetric(psi, i, i + 1, rng.uniform(-1.0, 1.0));
  return psi;
}

void shift_to_min_eigen(Eigen::MatrixXd& psi, int start, int size, double min_eigen) {
  auto block = psi.block(start, start, size, size);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(block, Eigen::EigenvaluesOnly);
  const double lambda_min = solver.eigenvalues()(0);
  if (lambda_min < min_eigen) block.diagonal().array() += min_eigen - lambda_min;
}

}  // namespace

GroundTruth gen_precision(const SimScenario& scenario) {
  scenario.validate();
  const int p = scenario.p;
  Rng rng(scenario.seed);
  Eigen::MatrixXd psi;

  switch (scenario.structure) {
    case Structure::band:
      psi = band_weights(p, rng);
      break;
    case Structure::random: {
      const Eigen::MatrixXd band = band_weights(p, rng);
      const std::vector<std::int64_t> perm = rng.permutation(p);
      psi = Eigen::MatrixXd::Zero(p, p);
      for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) psi(perm[a], perm[b]) = band(a, b);
      }
      break;
    }
    case Structure::cluster: {
      psi = Eigen::MatrixXd::Zero(p, p);
      const int bs = scenario.block_size;
      for (int start = 0; start < p; start += bs) {
        for (int a = 0; a < bs; ++a) {
          for (int b = a + 1; b < bs; ++b) {
            if (rng.uniform() < scenario.cluster_edge_prob) {
              set_symmetric(psi, start + a, start + b, rng.uniform(-1.0, 1.0));
            }
          }
        }
      }
      break;
    }
    case Structure::hub: {
      psi = Eigen::MatrixXd::Zero(p, p);
      const int bs = scenario.block_size;
      for (int start = 0; start < p; start += bs) {
        for (int b = 1; b < bs; ++b) set_symmetric(psi, start, start + b, rng.uniform(-1.0, 1.0));
      }
      break;
    }
  }

  GroundTruth truth;
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      if (psi(i, j) != 0.0) truth.true_edges.emplace_back(i, j);
    }
  }

  // Block-diagonal structures are made positive definite block by block, band
  // and random as a whole. Either way lambda_min(Psi) ends at min_eigen.
  const bool blockwise =
      scenario.structure == Structure::cluster || scenario.structure == Structure::hub;
  const int span = blockwise ? scenario.block_size : p;
  for (int start = 0; start < p; start += span) {
    shift_to_min_eigen(psi, start, span, scenario.min_eigen);
  }
  truth.psi = std::move(psi);
  return truth;
}

Eigen::MatrixXd sample_mvn(int n, const GroundTruth& truth, std::uint64_t seed) {
  const Eigen::Index p = truth.psi.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(truth.psi);
  if (llt.info() != Eigen::Success) throw NumericalError("Cholesky of the precision matrix failed");
  Rng rng(seed);
  Eigen::MatrixXd z(p, n);
  for (int r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < p; ++c) z(c, r) = rng.normal();
  }
  const Eigen::MatrixXd x = llt.matrixU().solve(z);  // L^T x = z
  return x.transpose();
}

std::vector<std::uint8_t> edge_labels(const EdgeList& edges, Eigen::Index p) {
  std::vector<std::uint8_t> labels(pair_count(p), 0);
  for (const auto& [i, j] : edges) {
    const auto a = std::min(i, j);
    const auto b = std::max(i, j);
    labels[pair_index(a, b, p)] = 1;
  }
  return labels;
}

namespace {

void check_labels(std::span<const double> scores, std::span<const std::uint8_t> labels,
                  std::size_t& positives) {
  if (scores.size() != labels.size()) throw ConfigError("scores and labels differ in length");
  positives = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(),
                                                     [](std::uint8_t l) { return l != 0; }));
  if (positives == 0 || positives == labels.size()) {
    throw DomainError("AUC needs at least one edge and one non-edge");
  }
}

std::vector<std::size_t> order_by_score_descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  std::size_t positives = 0;
  check_labels(scores, labels, positives);
  const std::size_t negatives = labels.size() - positives;
  const std::vector<std::size_t> order = order_by_score_descending(scores);

  // Walk tie groups from the top; each negative in a group beats the positives
  // seen before the group and ties with those inside it.
  double wins = 0.0;
  std::size_t pos_above = 0;
  for (std::size_t g = 0; g < order.size();) {
    std::size_t end = g;
    std::size_t group_pos = 0, group_neg = 0;
    while (end < order.size() && scores[order[end]] == scores[order[g]]) {
      (labels[order[end]] ? group_pos : group_neg) += 1;
      ++end;
    }
    wins += static_cast<double>(group_neg) *
            (static_cast<double>(pos_above) + 0.5 * static_cast<double>(group_pos));
    pos_above += group_pos;
    g = end;
  }
  return wins / (static_cast<double>(positives) * static_cast<double>(negatives));
}

double pr_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  std::size_t positives = 0;
  check_labels(scores, labels, positives);
  const std::vector<std::size_t> order = order_by_score_descending(scores);
  double ap = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t g = 0; g < order.size();) {
    std::size_t end = g;
    std::size_t group_pos = 0;
    while (end < order.size() && scores[order[end]] == scores[order[g]]) {
      group_pos += labels[order[end]] ? 1 : 0;
      ++end;
    }
    tp += group_pos;
    seen = end;
    if (group_pos > 0) {
      ap += static_cast<double>(group_pos) / static_cast<double>(positives) *
            (static_cast<double>(tp) / static_cast<double>(seen));
    }
    g = end;
  }
  return ap;
}

SimScenario replicate_scenario(const SimScenario& base, int replicate) {
  SimScenario s = base;
  s.seed = base.seed + static_cast<std::uint64_t>(replicate);
  return s;
}

std::uint64_t replicate_sample_seed(const SimScenario& base, int replicate) {
  return derive_seed(base.seed + static_cast<std::uint64_t>(replicate), 1);
}

EvalResult run_replicate(const SimScenario& base, int replicate, int threads) {
  const SimScenario scenario = replicate_scenario(base, replicate);
  const GroundTruth truth = gen_precision(scenario);
  const Eigen::MatrixXd raw = sample_mvn(scenario.n, truth, replicate_sample_seed(base, replicate));

  const auto start = std::chrono::steady_clock::now();
  const DataMatrix data = standardize(raw);
  const ModelFit fit = fit_delta(data, PriorSpec::identity());
  SweepOptions options;
  options.tests.marginal = false;
  options.threads = threads;
  const PairTable table = compute_all_pairs(data, fit, options);
  const auto stop = std::chrono::steady_clock::now();

  std::vector<double> scores(table.pairs.size());
  for (std::size_t k = 0; k < scores.size(); ++k) scores[k] = -table.pairs[k].tail_c;
  const std::vector<std::uint8_t> labels = edge_labels(truth.true_edges, scenario.p);

  EvalResult r;
  r.auc_roc = roc_auc(scores, labels);
  r.auc_pr = pr_auc(scores, labels);
  r.runtime_seconds = std::chrono::duration<double>(stop - start).count();
  return r;
}

BenchmarkSummary summarize(const SimScenario& scenario, std::vector<EvalResult> results) {
  BenchmarkSummary s;
  s.scenario = scenario;
  s.replicates = std::move(results);
  const double count = static_cast<double>(s.replicates.size());
  if (s.replicates.empty()) return s;
  for (const EvalResult& r : s.replicates) {
    s.mean_roc += r.auc_roc;
    s.mean_pr += r.auc_pr;
    s.mean_runtime += r.runtime_seconds;
  }
  s.mean_roc /= count;
  s.mean_pr /= count;
  s.mean_runtime /= count;
  if (s.replicates.size() > 1) {
    for (const EvalResult& r : s.replicates) {
      s.sd_roc += (r.auc_roc - s.mean_roc) * (r.auc_roc - s.mean_roc);
      s.sd_pr += (r.auc_pr - s.mean_pr) * (r.auc_pr - s.mean_pr);
    }
    s.sd_roc = std::sqrt(s.sd_roc / (count - 1.0));
    s.sd_pr = std::sqrt(s.sd_pr / (count - 1.0));
  }
  return s;
}

BenchmarkSummary run_benchmark(const SimScenario& scenario, int replicates, int threads) {
  scenario.validate();
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  std::vector<EvalResult> results(static_cast<std::size_t>(replicates));
  for (int r = 0; r < replicates; ++r) results[static_cast<std::size_t>(r)] = run_replicate(scenario, r, threads);
  return summarize(scenario, std::move(results));
}

}  // namespace beam
