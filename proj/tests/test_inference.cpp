#include <gtest/gtest.h>

#include <random>

#include "beam/inference.hpp"
#include "beam/mathfn.hpp"
#include "test_util.hpp"

using namespace beam;

namespace {

std::vector<double> v3() { return {0.01, 0.02, 0.03}; }

PairTable table_with_tails(Eigen::Index p, const std::vector<double>& tails) {
  PairTable t;
  t.p = p;
  t.tests = {false, true};
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j) {
      PairStat s;
      s.i = static_cast<std::int32_t>(i);
      s.j = static_cast<std::int32_t>(j);
      s.tail_c = tails[t.pairs.size()];
      t.pairs.push_back(s);
    }
  return t;
}

}  // namespace

TEST(Adjust, HandComputed) {
  const auto bon = adjust(v3(), AdjustmentMethod::bonferroni);
  EXPECT_DOUBLE_EQ(bon[0], 0.03);
  EXPECT_DOUBLE_EQ(bon[1], 0.06);
  EXPECT_DOUBLE_EQ(bon[2], 0.09);
  for (double v : adjust(v3(), AdjustmentMethod::benjamini_hochberg)) EXPECT_DOUBLE_EQ(v, 0.03);
  const auto none = adjust(v3(), AdjustmentMethod::none);
  EXPECT_EQ(none, v3());
  // Holm: 3*0.01, max(0.03, 2*0.02), max(0.04, 0.03)
  const auto holm = adjust(v3(), AdjustmentMethod::holm);
  EXPECT_DOUBLE_EQ(holm[0], 0.03);
  EXPECT_DOUBLE_EQ(holm[1], 0.04);
  EXPECT_DOUBLE_EQ(holm[2], 0.04);
  const auto by = adjust(v3(), AdjustmentMethod::benjamini_yekutieli);
  for (double v : by) EXPECT_NEAR(v, 0.03 * (1 + 0.5 + 1.0 / 3), 1e-15);
}

TEST(Adjust, KeepsInputOrderAndCaps) {
  const std::vector<double> p{0.5, 0.001, 0.2, 0.9};
  const auto bon = adjust(p, AdjustmentMethod::bonferroni);
  EXPECT_EQ(bon[0], 1.0);
  EXPECT_DOUBLE_EQ(bon[1], 0.004);
  const auto bh = adjust(p, AdjustmentMethod::benjamini_hochberg);
  EXPECT_DOUBLE_EQ(bh[1], 0.004);
  EXPECT_DOUBLE_EQ(bh[2], 0.2 * 4 / 2);
  EXPECT_DOUBLE_EQ(bh[3], 0.9);
}

TEST(Adjust, RejectsOutOfRange) {
  EXPECT_THROW(adjust(std::vector<double>{0.1, 1.2}, AdjustmentMethod::holm), DomainError);
  EXPECT_THROW(adjust(std::vector<double>{-0.1}, AdjustmentMethod::none), DomainError);
  EXPECT_THROW(adjust(std::vector<double>{NAN}, AdjustmentMethod::bonferroni), DomainError);
}

TEST(Adjust, MonotoneAndNested) {
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> p(300);
    for (auto& v : p) v = std::pow(u(eng), 4.0);
    p[7] = p[8];  // a tie
    const auto bon = adjust(p, AdjustmentMethod::bonferroni);
    const auto holm = adjust(p, AdjustmentMethod::holm);
    const auto bh = adjust(p, AdjustmentMethod::benjamini_hochberg);
    const auto by = adjust(p, AdjustmentMethod::benjamini_yekutieli);
    for (std::size_t a = 0; a < p.size(); ++a) {
      EXPECT_LE(holm[a], bon[a]);
      EXPECT_LE(bh[a], holm[a]);
      EXPECT_LE(bh[a], by[a]);
      for (std::size_t b = 0; b < p.size(); ++b) {
        if (p[a] <= p[b]) {
          EXPECT_LE(bon[a], bon[b]);
          EXPECT_LE(holm[a], holm[b]);
          EXPECT_LE(bh[a], bh[b]);
          EXPECT_LE(by[a], by[b]);
        }
      }
    }
    EXPECT_EQ(holm[7], holm[8]);
    EXPECT_EQ(bh[7], bh[8]);
    std::vector<double> inplace = p;
    adjust_in_place(inplace, AdjustmentMethod::holm);
    EXPECT_EQ(inplace, holm);
  }
}

TEST(Adjust, ParseNames) {
  EXPECT_EQ(parse_adjustment("BH"), AdjustmentMethod::benjamini_hochberg);
  EXPECT_EQ(parse_adjustment("fdr"), AdjustmentMethod::benjamini_hochberg);
  EXPECT_EQ(parse_adjustment("by"), AdjustmentMethod::benjamini_yekutieli);
  EXPECT_EQ(parse_adjustment("holm"), AdjustmentMethod::holm);
  EXPECT_FALSE(parse_adjustment("sidak").has_value());
}

TEST(SelectEdges, ThreeVariables) {
  const PairTable t = table_with_tails(3, {1e-9, 0.5, 0.9});
  const GraphResult g = select_edges(t, TestType::conditional, AdjustmentMethod::bonferroni, 0.1);
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0].i, 0);
  EXPECT_EQ(g.edges[0].j, 1);
  EXPECT_TRUE(g.has_edge(1, 0));
  EXPECT_FALSE(g.has_edge(0, 2));
  EXPECT_FALSE(g.has_edge(2, 2));
  EXPECT_EQ(degree_distribution(g), (std::map<std::int32_t, std::int64_t>{{0, 1}, {1, 2}}));
}

TEST(SelectEdges, NothingSignificant) {
  const PairTable t = table_with_tails(10, std::vector<double>(45, 1.0));
  const GraphResult g = select_edges(t, TestType::conditional, AdjustmentMethod::holm, 0.5);
  EXPECT_TRUE(g.edges.empty());
  EXPECT_EQ(degree_distribution(g), (std::map<std::int32_t, std::int64_t>{{0, 10}}));
}

TEST(SelectEdges, TriangleAndLevelOne) {
  const PairTable t = table_with_tails(3, {0.2, 0.999999, 0.3});
  const GraphResult g = select_edges(t, TestType::conditional, AdjustmentMethod::none, 1.0);
  EXPECT_EQ(g.edges.size(), 3u);
  EXPECT_EQ(degree_distribution(g), (std::map<std::int32_t, std::int64_t>{{2, 3}}));
  EXPECT_THROW(select_edges(t, TestType::conditional, AdjustmentMethod::none, 0.0), DomainError);
}

TEST(SelectEdges, DegreesMatchAdjacency) {
  std::mt19937_64 eng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> tails(190);
  for (auto& v : tails) v = std::pow(u(eng), 6.0);
  const PairTable t = table_with_tails(20, tails);
  const GraphResult g = select_edges(t, TestType::conditional, AdjustmentMethod::benjamini_hochberg, 0.1);
  std::int64_t total = 0;
  for (int i = 0; i < 20; ++i) {
    int row = 0;
    for (int j = 0; j < 20; ++j) {
      EXPECT_EQ(g.has_edge(i, j), g.has_edge(j, i));
      row += g.has_edge(i, j);
    }
    EXPECT_EQ(row, g.degrees[i]);
  }
  for (const auto& [deg, count] : degree_distribution(g)) total += count;
  EXPECT_EQ(total, 20);
  for (const Edge& e : g.edges) EXPECT_LE(e.adjusted_tail, 0.1);
}
