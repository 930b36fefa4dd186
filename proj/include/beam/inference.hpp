#pragma once

// Multiplicity adjustment of tail probabilities and edge selection for the
// bidirected (marginal) and undirected (conditional) graphs.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beam/pairstats.hpp"

namespace beam {

enum class AdjustmentMethod { none, bonferroni, holm, benjamini_hochberg, benjamini_yekutieli };

std::string_view to_string(AdjustmentMethod method);
/// Accepts none, bonferroni, holm, bh/fdr/benjamini_hochberg, by/benjamini_yekutieli.
std::optional<AdjustmentMethod> parse_adjustment(std::string_view name);

/// Adjusted p-values in input order. Throws DomainError on values outside [0, 1].
std::vector<double> adjust(std::span<const double> pvalues, AdjustmentMethod method);

/// In-place variant used on very large columns; sorts a 32-bit permutation when it fits.
void adjust_in_place(std::vector<double>& pvalues, AdjustmentMethod method);

enum class TestType { marginal, conditional };

std::string_view to_string(TestType test);

struct Edge {
  std::int32_t i = 0;
  std::int32_t j = 0;
  double log_sbf = 0.0;
  double raw_tail = 0.0;
  double adjusted_tail = 0.0;
};

struct GraphResult {
  TestType test = TestType::conditional;
  AdjustmentMethod method = AdjustmentMethod::bonferroni;
  double level = 0.05;
  Eigen::Index p = 0;
  std::vector<Edge> edges;
  /// Sorted neighbour lists; the adjacency matrix in sparse form.
  std::vector<std::vector<std::int32_t>> neighbours;
  std::vector<std::int32_t> degrees;

  bool has_edge(Eigen::Index i, Eigen::Index j) const;
};

/// Raw tail column of one test, in pair order.
std::vector<double> tail_column(const PairTable& table, TestType test);

/// Builds the graph from an already adjusted column (same order as table.pairs).
GraphResult build_graph(const PairTable& table, TestType test, AdjustmentMethod method,
                        double level, std::span<const double> adjusted);

/// Adjusts the chosen tail column over all p(p-1)/2 pairs and keeps pairs with
/// adjusted value <= level. Requires level in (0, 1].
GraphResult select_edges(const PairTable& table, TestType test, AdjustmentMethod method,
                         double level);

/// degree -> number of nodes with that degree.
std::map<std::int32_t, std::int64_t> degree_distribution(const GraphResult& graph);
std::map<std::int32_t, std::int64_t> degree_distribution(std::span<const std::int32_t> degrees);

}  // namespace beam
