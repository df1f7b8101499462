#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "positivity/propensity.hpp"
#include "positivity/synth.hpp"

using namespace positivity;

namespace {

Dataset separated_1d() {
  std::vector<double> x;
  std::vector<int> t;
  for (int i = 0; i < 20; ++i) {
    x.push_back(i < 10 ? -1.0 : 1.0);
    t.push_back(i < 10 ? 0 : 1);
  }
  return Dataset(Matrix(20, 1, x), {"x"}, t);
}

Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed, double treated_share = 0.5) {
  Rng rng(seed);
  std::vector<double> x;
  std::vector<int> t;
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      x.push_back(rng.normal() * (j + 1) + static_cast<double>(j));
      z += x.back() * 0.3;
    }
    t.push_back(rng.bernoulli(treated_share < 0 ? sigmoid(z) : treated_share) ? 1 : 0);
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
  return Dataset(Matrix(n, d, x), names, t);
}

// Independent reference: fraction of positive/negative pairs ordered correctly.
double auc_by_pairs(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
    }
  }
  return wins / pairs;
}

}  // namespace

TEST(Fit, SeparatedDataGivesPositiveWeight) {
  const auto model = fit(separated_1d(), {0.1, 1e-8, 1000, {}});
  EXPECT_GT(model.weights[0], 0.0);
  EXPECT_TRUE(model.fit.converged);
}

TEST(Fit, ConstantFeatureWeightIsExactlyZero) {
  Rng rng(5);
  std::vector<double> x;
  std::vector<int> t;
  for (int i = 0; i < 100; ++i) {
    x.push_back(0.1);
    x.push_back(rng.normal());
    t.push_back(x.back() + rng.normal() > 0 ? 1 : 0);
  }
  const Dataset ds(Matrix(100, 2, x), {"const", "signal"}, t);
  for (const auto& grid : {std::vector<std::size_t>{}, std::vector<std::size_t>{4, 8}}) {
    const auto model = fit(ds, {1e-3, 1e-8, 1000, grid});
    EXPECT_EQ(model.weights[0], 0.0);
    EXPECT_EQ(model.standardization[0].stddev, 1.0);
    EXPECT_NE(model.weights[1], 0.0);
  }
}

TEST(Fit, HugePenaltyLeavesOnlyTheBaseRate) {
  // As lambda grows every penalized weight vanishes and the unpenalized
  // intercept minimizes the constant-model loss, whose optimum is logit(mean T).
  for (double share : {0.5, 0.3}) {
    const Dataset ds = random_dataset(2000, 3, 17, share);
    const double mean_t = static_cast<double>(ds.group_size(1)) / static_cast<double>(ds.size());
    for (const auto& grid : {std::vector<std::size_t>{}, std::vector<std::size_t>{5}}) {
      const auto model = fit(ds, {1e6, 1e-9, 1000, grid});
      EXPECT_NEAR(model.intercept, logit(mean_t), 1e-3);
      for (double w : model.weights) EXPECT_NEAR(w, 0.0, 1e-3);
      for (double w : model.cell_weights) EXPECT_NEAR(w, 0.0, 1e-3);
    }
  }
}

TEST(Fit, ReportsNonConvergenceAtIterationCap) {
  const auto model = fit(random_dataset(300, 2, 1, -1.0), {1e-4, 1e-14, 3, {}});
  EXPECT_FALSE(model.fit.converged);
  EXPECT_EQ(model.fit.iterations, 3u);
}

TEST(Fit, IsDeterministic) {
  const Dataset ds = random_dataset(500, 3, 9, -1.0);
  const FitOptions options{1e-3, 1e-8, 1000, {5, 10}};
  const auto a = fit(ds, options);
  const auto b = fit(ds, options);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.cell_weights, b.cell_weights);
  EXPECT_EQ(predict(a, ds), predict(b, ds));
}

TEST(Predict, ZeroModelGivesHalf) {
  const Dataset ds = random_dataset(10, 2, 2);
  PropensityModel model;
  model.feature_names = ds.feature_names();
  model.standardization.assign(2, {});
  model.weights.assign(2, 0.0);
  for (double s : predict(model, ds)) EXPECT_EQ(s, 0.5);

  model.intercept = logit(0.8);
  for (double s : predict(model, ds)) EXPECT_NEAR(s, 0.8, 1e-12);
}

TEST(Predict, ScoresStayInsideOpenUnitInterval) {
  const Dataset ds = random_dataset(50, 2, 4);
  PropensityModel model;
  model.feature_names = ds.feature_names();
  model.standardization.assign(2, {});
  for (double w : {1e3, -1e3, 1e6}) {
    model.weights.assign(2, w);
    for (double s : predict(model, ds)) {
      EXPECT_GT(s, 0.0);
      EXPECT_LT(s, 1.0);
    }
  }
}

TEST(Predict, FeatureNameMismatchThrows) {
  const auto model = fit(separated_1d(), {});
  const Dataset other(Matrix(2, 1, {0.0, 1.0}), {"y"}, {0, 1});
  EXPECT_THROW(predict(model, other), std::invalid_argument);
}

TEST(FitPredict, SeparatedDataHasPerfectAuc) {
  Config c;
  c.grid_resolutions = {};
  EXPECT_EQ(fit_predict(separated_1d(), c).auc, 1.0);
}

TEST(FitPredict, CoinFlipAucIsNearHalf) {
  const Dataset ds = generate(SynthSpec::coin_flip(10000, 123));
  Config linear;
  linear.grid_resolutions = {};
  const double linear_auc = fit_predict(ds, linear).auc;
  EXPECT_GE(linear_auc, 0.45);
  EXPECT_LE(linear_auc, 0.58);

  Config cross_fit;
  cross_fit.cross_fit_folds = 5;
  cross_fit.seed = 7;
  const double cf_auc = fit_predict(ds, cross_fit).auc;
  EXPECT_GE(cf_auc, 0.45);
  EXPECT_LE(cf_auc, 0.58);
}

TEST(FitPredict, TooManyFoldsThrows) {
  Config c;
  c.cross_fit_folds = 21;
  EXPECT_THROW(fit_predict(separated_1d(), c), std::invalid_argument);
}

TEST(FitPredict, CrossFitScoresEveryRowOnce) {
  for (std::size_t k : {2u, 3u, 7u}) {
    const auto fold = fold_assignment(100, k, 42);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t f : fold) {
      ASSERT_LT(f, k);
      ++sizes[f];
    }
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    EXPECT_LE(*hi - *lo, 1u);
  }
  EXPECT_EQ(fold_assignment(50, 5, 1), fold_assignment(50, 5, 1));
  EXPECT_NE(fold_assignment(50, 5, 1), fold_assignment(50, 5, 2));

  Config c;
  c.cross_fit_folds = 4;
  const auto result = fit_predict(random_dataset(400, 2, 8, -1.0), c);
  EXPECT_EQ(result.fits.size(), 4u);
  for (double s : result.scores) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
}

TEST(Metrics, TwoPointAucAndLogLoss) {
  const std::vector<double> s{0.1, 0.9};
  const std::vector<int> y{0, 1};
  EXPECT_EQ(auc(s, y), 1.0);
  EXPECT_NEAR(log_loss(s, y), -(std::log(0.9) + std::log(0.9)) / 2.0, 1e-15);
}

TEST(Metrics, AucExamples) {
  EXPECT_EQ(auc(std::vector<double>{0.2, 0.8}, std::vector<int>{0, 1}), 1.0);
  EXPECT_EQ(auc(std::vector<double>{0.5, 0.5}, std::vector<int>{0, 1}), 0.5);
  // Pairs (0.35,0.1) (0.35,0.4) (0.8,0.1) (0.8,0.4): three of four ordered.
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}), 0.75);
  EXPECT_THROW(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), std::invalid_argument);
}

TEST(Metrics, AucMatchesPairEnumerationAndIsRankInvariant) {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s;
    std::vector<int> y;
    const std::size_t n = 2 + rng.below(40);
    for (std::size_t i = 0; i < n; ++i) {
      s.push_back(static_cast<double>(rng.below(10)) / 10.0);  // many ties
      y.push_back(i < 2 ? static_cast<int>(i) : static_cast<int>(rng.below(2)));
    }
    const double reference = auc_by_pairs(s, y);
    EXPECT_NEAR(auc(s, y), reference, 1e-12);
    std::vector<double> transformed;
    for (double v : s) transformed.push_back(std::exp(3.0 * v) - 7.0);
    EXPECT_NEAR(auc(transformed, y), reference, 1e-12);
  }
}

TEST(Objective, GradientMatchesCentralDifferences) {
  const Dataset ds = random_dataset(150, 3, 21, -1.0);
  const auto model = fit(ds, {1e-2, 1e-8, 5, {3, 4}});
  const auto linear = detail::linear_features(model);
  const Design design(ds, model.standardization, linear, model.grid);
  const LogisticObjective objective(design, ds.treatment(), model.grid.size(), 0.05);

  Rng rng(77);
  for (int point = 0; point < 10; ++point) {
    std::vector<double> theta(objective.parameter_count());
    for (double& v : theta) v = rng.normal();
    std::vector<double> analytic(theta.size());
    objective.evaluate(theta, analytic);
    double diff = 0.0;
    double norm = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double h = 1e-5;
      auto plus = theta;
      auto minus = theta;
      plus[k] += h;
      minus[k] -= h;
      const double numeric = (objective.value(plus) - objective.value(minus)) / (2 * h);
      diff += (numeric - analytic[k]) * (numeric - analytic[k]);
      norm += analytic[k] * analytic[k];
    }
    EXPECT_LT(std::sqrt(diff / norm), 1e-5);
  }
}
