#include "beam/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "beam/mathfn.hpp"

namespace beam {

std::string_view to_string(AdjustmentMethod method) {
  switch (method) {
    case AdjustmentMethod::none: return "none";
    case AdjustmentMethod::bonferroni: return "bonferroni";
    case AdjustmentMethod::holm: return "holm";
    case AdjustmentMethod::benjamini_hochberg: return "BH";
    case AdjustmentMethod::benjamini_yekutieli: return "BY";
  }
  return "none";
}

std::optional<AdjustmentMethod> parse_adjustment(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "none") return AdjustmentMethod::none;
  if (lower == "bonferroni") return AdjustmentMethod::bonferroni;
  if (lower == "holm") return AdjustmentMethod::holm;
  if (lower == "bh" || lower == "fdr" || lower == "benjamini_hochberg") {
    return AdjustmentMethod::benjamini_hochberg;
  }
  if (lower == "by" || lower == "benjamini_yekutieli") return AdjustmentMethod::benjamini_yekutieli;
  return std::nullopt;
}

std::string_view to_string(TestType test) {
  return test == TestType::marginal ? "marginal" : "conditional";
}

namespace {

void check_pvalues(std::span<const double> pvalues) {
  for (double v : pvalues) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("p-values must lie in [0, 1]");
  }
}

// Step procedures on the ascending order `order` (indices into values).
template <typename Index>
void step_adjust(std::vector<double>& values, std::vector<Index>& order, AdjustmentMethod method) {
  const std::size_t m = values.size();
  const double md = static_cast<double>(m);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return values[a] < values[b]; });

  if (method == AdjustmentMethod::holm) {
    // Step-down: cummax of (m - k + 1) p_(k) from the smallest up.
    double running = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const Index idx = order[k];
      running = std::max(running, std::min(1.0, (md - static_cast<double>(k)) * values[idx]));
      values[idx] = running;
    }
    return;
  }

  // Step-up: cummin of c m p_(k) / k from the largest down.
  double c = 1.0;
  if (method == AdjustmentMethod::benjamini_yekutieli) {
    c = 0.0;
    for (std::size_t k = m; k >= 1; --k) c += 1.0 / static_cast<double>(k);
  }
  double running = 1.0;
  for (std::size_t k = m; k >= 1; --k) {
    const Index idx = order[k - 1];
    running = std::min(running, c * md * values[idx] / static_cast<double>(k));
    values[idx] = running;
  }
}

}  // namespace

void adjust_in_place(std::vector<double>& values, AdjustmentMethod method) {
  check_pvalues(values);
  const std::size_t m = values.size();
  if (m == 0) return;
  switch (method) {
    case AdjustmentMethod::none:
      return;
    case AdjustmentMethod::bonferroni: {
      const double md = static_cast<double>(m);
      for (double& v : values) v = std::min(1.0, md * v);
      return;
    }
    case AdjustmentMethod::holm:
    case AdjustmentMethod::benjamini_hochberg:
    case AdjustmentMethod::benjamini_yekutieli:
      if (m <= std::numeric_limits<std::uint32_t>::max()) {
        std::vector<std::uint32_t> order(m);
        step_adjust(values, order, method);
      } else {
        std::vector<std::uint64_t> order(m);
        step_adjust(values, order, method);
      }
      return;
  }
}

std::vector<double> adjust(std::span<const double> pvalues, AdjustmentMethod method) {
  std::vector<double> out(pvalues.begin(), pvalues.end());
  adjust_in_place(out, method);
  return out;
}

bool GraphResult::has_edge(Eigen::Index i, Eigen::Index j) const {
  if (i == j || i < 0 || j < 0 || i >= p || j >= p) return false;
  const auto& row = neighbours[static_cast<std::size_t>(i)];
  return std::binary_search(row.begin(), row.end(), static_cast<std::int32_t>(j));
}

std::vector<double> tail_column(const PairTable& table, TestType test) {
  std::vector<double> out;
  out.reserve(table.pairs.size());
  for (const PairStat& s : table.pairs) {
    out.push_back(test == TestType::marginal ? s.tail_m : s.tail_c);
  }
  return out;
}

GraphResult build_graph(const PairTable& table, TestType test, AdjustmentMethod method,
                        double level, std::span<const double> adjusted) {
  if (!(level > 0.0 && level <= 1.0)) throw DomainError("selection level must lie in (0, 1]");
  if (adjusted.size() != table.pairs.size()) throw DomainError("adjusted column has the wrong length");
  GraphResult g;
  g.test = test;
  g.method = method;
  g.level = level;
  g.p = table.p;
  g.neighbours.assign(static_cast<std::size_t>(table.p), {});
  g.degrees.assign(static_cast<std::size_t>(table.p), 0);
  for (std::size_t k = 0; k < table.pairs.size(); ++k) {
    if (!(adjusted[k] <= level)) continue;
    const PairStat& s = table.pairs[k];
    const bool marginal = test == TestType::marginal;
    g.edges.push_back({s.i, s.j, marginal ? s.log_sbf_m : s.log_sbf_c,
                       marginal ? s.tail_m : s.tail_c, adjusted[k]});
    g.neighbours[static_cast<std::size_t>(s.i)].push_back(s.j);
    g.neighbours[static_cast<std::size_t>(s.j)].push_back(s.i);
    ++g.degrees[static_cast<std::size_t>(s.i)];
    ++g.degrees[static_cast<std::size_t>(s.j)];
  }
  for (auto& row : g.neighbours) std::sort(row.begin(), row.end());
  return g;
}

GraphResult select_edges(const PairTable& table, TestType test, AdjustmentMethod method,
                         double level) {
  std::vector<double> adjusted = tail_column(table, test);
  adjust_in_place(adjusted, method);
  return build_graph(table, test, method, level, adjusted);
}

std::map<std::int32_t, std::int64_t> degree_distribution(std::span<const std::int32_t> degrees) {
  std::map<std::int32_t, std::int64_t> hist;
  for (std::int32_t d : degrees) ++hist[d];
  return hist;
}

std::map<std::int32_t, std::int64_t> degree_distribution(const GraphResult& graph) {
  return degree_distribution(graph.degrees);
}

}  // namespace beam
