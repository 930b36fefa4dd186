#include <gtest/gtest.h>

#include <cmath>

#include "beam/core_model.hpp"
#include "beam/mathfn.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace beam;
using testutil::random_data;
using testutil::random_spd;

TEST(Standardize, ThreePointColumn) {
  Eigen::MatrixXd raw(3, 2);
  raw << 1, 4, 2, 0, 3, 7;
  const DataMatrix d = standardize(raw);
  const double s = std::sqrt(1.5);
  EXPECT_NEAR(d.y()(0, 0), -s, 1e-15);
  EXPECT_NEAR(d.y()(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(d.y()(2, 0), s, 1e-15);
}

TEST(Standardize, ColumnsCentredWithUnitMeanSquare) {
  const DataMatrix d = standardize(random_data(40, 7, 3) * 13.0 + Eigen::MatrixXd::Constant(40, 7, 5.0));
  for (int j = 0; j < 7; ++j) {
    EXPECT_NEAR(d.y().col(j).sum(), 0.0, 1e-12);
    EXPECT_NEAR(d.y().col(j).squaredNorm(), 40.0, 1e-10);
  }
}

TEST(Standardize, Idempotent) {
  const DataMatrix once = standardize(random_data(25, 6, 4));
  const DataMatrix twice = standardize(once.y());
  EXPECT_LE((once.y() - twice.y()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Standardize, Errors) {
  Eigen::MatrixXd raw = random_data(10, 4, 1);
  raw.col(2).setConstant(5.0);
  try {
    standardize(raw);
    FAIL() << "constant column accepted";
  } catch (const ConstantColumnError& e) {
    EXPECT_EQ(e.column(), 2u);
  }
  EXPECT_THROW(standardize(random_data(2, 3, 1)), InsufficientSamplesError);
  Eigen::MatrixXd bad = random_data(10, 3, 1);
  bad(4, 1) = NAN;
  EXPECT_THROW(standardize(bad), InputError);
}

TEST(Standardize, KeepsNames) {
  const DataMatrix d = standardize(random_data(5, 2, 1), {"a", "b"});
  EXPECT_EQ(d.name(1), "b");
  EXPECT_EQ(standardize(random_data(5, 2, 1)).name(1), "V2");
}

TEST(GramSpectrum, MatchesDenseEigenvaluesBothShapes) {
  for (auto [n, p] : {std::pair{30, 8}, std::pair{6, 15}}) {
    const Eigen::MatrixXd y = random_data(n, p, 9);
    const auto eig = gram_spectrum(y);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(y.transpose() * y);
    Eigen::VectorXd ref = es.eigenvalues().reverse();
    ASSERT_EQ(static_cast<int>(eig.size()), p);
    for (int k = 0; k < p; ++k) EXPECT_NEAR(eig[k], std::max(0.0, ref(k)), 1e-9 * ref(0));
  }
}

TEST(PriorSpec, Validation) {
  EXPECT_THROW(PriorSpec::scaled_identity(0.0), InputError);
  Eigen::MatrixXd asym = random_spd(3, 1);
  asym(0, 1) += 0.5;
  EXPECT_THROW(PriorSpec::explicit_matrix(asym), InputError);
  Eigen::MatrixXd indef = Eigen::MatrixXd::Identity(3, 3);
  indef(2, 2) = -1;
  EXPECT_THROW(PriorSpec::explicit_matrix(indef), InputError);
  EXPECT_EQ(PriorSpec::identity().describe(), "identity");
}

TEST(AlphaDelta, RoundTrip) {
  for (double a : {1e-4, 0.3, 0.999}) {
    const double delta = delta_from_alpha(a, 50, 12);
    EXPECT_GT(delta, 13.0);
    EXPECT_NEAR(alpha_from_delta(delta, 50, 12), a, 1e-12);
  }
}

TEST(LogMarginal, OneVariableCollapse) {
  const DataMatrix d = standardize(random_data(9, 1, 2));
  const double s = d.y().squaredNorm();
  const double n = 9;
  for (double delta : {2.5, 7.0, 40.0}) {
    const double expected = -0.5 * n * std::log(M_PI) + std::lgamma((delta + n) / 2) - std::lgamma(delta / 2) +
                            delta / 2 * std::log(delta - 2) - (delta + n) / 2 * std::log(delta - 2 + s);
    EXPECT_NEAR(log_marginal_likelihood(d, PriorSpec::identity(), delta), expected, 1e-10);
  }
}

TEST(LogMarginal, MatchesDeterminantFormula) {
  for (int p = 2; p <= 8; ++p) {
    for (int n : {5, 30}) {
      const DataMatrix d = standardize(random_data(n, p, 100 + p + n));
      for (const PriorSpec& prior :
           {PriorSpec::identity(), PriorSpec::scaled_identity(0.37), PriorSpec::explicit_matrix(random_spd(p, p))}) {
        for (double delta : {p + 1.5, p + 4.0, 3.0 * p + 50}) {
          const double ref = oracle::log_ml_det(d.y(), prior.dense(p), delta);
          EXPECT_NEAR(log_marginal_likelihood(d, prior, delta), ref, 1e-8) << p << ' ' << n << ' ' << delta;
        }
      }
    }
  }
}

TEST(LogMarginal, DeltaBoundary) {
  const DataMatrix d = standardize(random_data(10, 3, 1));
  EXPECT_THROW(log_marginal_likelihood(d, PriorSpec::identity(), 4.0), DomainError);
  EXPECT_THROW(log_marginal_likelihood(d, PriorSpec::identity(), 3.0), DomainError);
}

TEST(FitDelta, BeatsGridAndIsDeterministic) {
  for (int rep = 0; rep < 5; ++rep) {
    const int p = 4 + 3 * rep, n = 20 + 15 * rep;
    const DataMatrix d = standardize(random_data(n, p, 700 + rep, 0.3 * rep));
    const ModelFit fit = fit_delta(d, PriorSpec::identity());
    double best = -INFINITY, best_alpha = 0;
    for (int k = 1; k <= 999; ++k) {
      const double a = k / 1000.0;
      const double v = log_marginal_likelihood(d, PriorSpec::identity(), delta_from_alpha(a, n, p));
      if (v > best) {
        best = v;
        best_alpha = a;
      }
    }
    EXPECT_GE(fit.log_ml, best - 1e-6);
    if (best_alpha > 0.001 && best_alpha < 0.999) EXPECT_LE(std::abs(fit.alpha - best_alpha), 0.002);
    const ModelFit again = fit_delta(d, PriorSpec::identity());
    EXPECT_EQ(fit.delta, again.delta);
    EXPECT_EQ(fit.log_ml, again.log_ml);
    EXPECT_NEAR(fit.log_ml, log_marginal_likelihood(d, PriorSpec::identity(), fit.delta), 1e-12);
  }
}

TEST(FitDelta, CurveIsUnimodal) {
  for (int rep = 0; rep < 6; ++rep) {
    const int n = rep % 2 ? 15 : 80;
    const DataMatrix d = standardize(random_data(n, 10, 900 + rep, 0.4 * rep));
    const auto curve = marginal_likelihood_curve(d, PriorSpec::identity(), 200);
    ASSERT_EQ(curve.size(), 200u);
    int turns = 0;
    for (std::size_t k = 1; k + 1 < curve.size(); ++k) {
      if (curve[k].log_ml > curve[k - 1].log_ml && curve[k].log_ml > curve[k + 1].log_ml) ++turns;
      if (curve[k].log_ml < curve[k - 1].log_ml && curve[k].log_ml < curve[k + 1].log_ml) ++turns;
    }
    EXPECT_LE(turns, 1);
  }
}

TEST(PosteriorMeans, SigmaAndOmegaAreInverse) {
  const DataMatrix d = standardize(random_data(30, 6, 17));
  for (const PriorSpec& prior : {PriorSpec::identity(), PriorSpec::explicit_matrix(random_spd(6, 3))}) {
    const ModelFit fit = fit_delta(d, prior);
    const Eigen::MatrixXd sig = posterior_mean_sigma(d, fit);
    const Eigen::MatrixXd om = posterior_mean_omega(d, fit);
    const double c = (fit.delta + 30) / (fit.delta + 30 - 6 - 1);
    EXPECT_LE((sig * om - c * Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((om - om.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sig).eigenvalues().minCoeff(), 0.0);
    const Eigen::MatrixXd blend = fit.alpha * prior.dense(6) + (1 - fit.alpha) * d.gram() / 30.0;
    EXPECT_LE((sig - blend).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PosteriorMeans, ShrinkageLimits) {
  const int p = 5, n = 40;
  const DataMatrix d = standardize(random_data(n, p, 23));
  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(p, p);
  std::vector<double> gaps;
  for (double delta : {10.0 * p, 100.0 * p, 1000.0 * p}) {
    gaps.push_back((posterior_mean_sigma(d, fit_at_delta(d, PriorSpec::identity(), delta)) - ident)
                       .cwiseAbs().rowwise().sum().maxCoeff());
  }
  EXPECT_LT(gaps[1], gaps[0]);
  EXPECT_LT(gaps[2], gaps[1]);
  EXPECT_LT(gaps[2], 0.02 * gaps[0]);
  const ModelFit near = fit_at_delta(d, PriorSpec::identity(), p + 1 + 1e-6);
  EXPECT_LT((posterior_mean_sigma(d, near) - d.gram() / n).cwiseAbs().rowwise().sum().maxCoeff(), 1e-3);
}

TEST(PosteriorMeans, OmegaApproachesSampleInverse) {
  const Eigen::MatrixXd stream = random_data(10000, 4, 31, 0.8);
  double prev = INFINITY;
  for (int n : {100, 1000, 10000}) {
    const DataMatrix d = standardize(stream.topRows(n));
    const ModelFit fit = fit_delta(d, PriorSpec::identity());
    const Eigen::MatrixXd target = (d.gram() / n).inverse();
    const double gap = (posterior_mean_omega(d, fit) - target).cwiseAbs().maxCoeff();
    EXPECT_LT(gap, prev) << n;
    prev = gap;
  }
}
