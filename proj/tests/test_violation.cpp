#include <gtest/gtest.h>

#include "positivity/random.hpp"
#include "positivity/synth.hpp"
#include "positivity/propensity.hpp"
#include "positivity/violation.hpp"

using namespace positivity;

namespace {

GroupHistograms make_hist(std::vector<std::size_t> c0, std::vector<std::size_t> c1) {
  GroupHistograms h;
  h.bins = c0.size();
  for (auto c : c0) h.n0 += c;
  for (auto c : c1) h.n1 += c;
  h.counts0 = std::move(c0);
  h.counts1 = std::move(c1);
  return h;
}

GroupHistograms random_hist(Rng& rng, std::size_t bins) {
  std::vector<std::size_t> c0(bins), c1(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    c0[i] = rng.below(3) == 0 ? 0 : rng.below(8);
    c1[i] = rng.below(3) == 0 ? 0 : rng.below(8);
  }
  c0[0] += 1;
  c1[bins - 1] += 1;
  return make_hist(c0, c1);
}

// Scores placed at bin centres so they land in the intended bin.
void scores_from_hist(const GroupHistograms& h, std::vector<double>& scores, std::vector<int>& t) {
  for (std::size_t i = 0; i < h.bins; ++i) {
    const double centre = (static_cast<double>(i) + 0.5) / static_cast<double>(h.bins);
    for (std::size_t k = 0; k < h.counts0[i]; ++k) {
      scores.push_back(centre);
      t.push_back(0);
    }
    for (std::size_t k = 0; k < h.counts1[i]; ++k) {
      scores.push_back(centre);
      t.push_back(1);
    }
  }
}

}  // namespace

TEST(ViolationBins, Examples) {
  EXPECT_EQ(violation_bins(make_hist({3, 0, 2}, {0, 4, 5}), 0), (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(violation_bins(make_hist({3, 1, 2}, {3, 1, 2}), 0).empty());
  EXPECT_EQ(violation_bins(make_hist({1, 0}, {0, 9}), 1), (std::vector<std::size_t>{1}));
}

TEST(ViolationBins, MatchesRescanOfThresholdedCounts) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto h = random_hist(rng, 2 + rng.below(50));
    for (std::size_t tau : {0u, 1u, 5u}) {
      std::vector<std::size_t> expected;
      for (std::size_t i = 0; i < h.bins; ++i) {
        const std::size_t a = h.counts0[i] > tau ? h.counts0[i] : 0;
        const std::size_t b = h.counts1[i] > tau ? h.counts1[i] : 0;
        if ((a == 0) != (b == 0)) expected.push_back(i);
      }
      EXPECT_EQ(violation_bins(h, tau), expected);
    }
  }
}

TEST(Detect, NothingSuspected) {
  const auto h = make_hist({5, 5}, {5, 5});
  std::vector<double> scores;
  std::vector<int> t;
  scores_from_hist(h, scores, t);
  const auto report = detect(h, Config{}, scores, t);
  EXPECT_TRUE(report.tests.empty());
  EXPECT_FALSE(report.violation_detected());
}

TEST(Detect, SingleLopsidedBinIsFlagged) {
  std::vector<std::size_t> c0(100, 0), c1(100, 0);
  c0[10] = 500;
  c1[10] = 470;
  c1[80] = 30;
  const auto h = make_hist(c0, c1);
  std::vector<double> scores;
  std::vector<int> t;
  scores_from_hist(h, scores, t);
  Config config;
  config.alpha = 0.01;
  const auto report = detect(h, config, scores, t);
  ASSERT_EQ(report.tests.size(), 1u);
  EXPECT_EQ(report.tests[0].bin, 80u);
  EXPECT_EQ(report.tests[0].k0, 0u);
  EXPECT_EQ(report.tests[0].k1, 30u);
  EXPECT_EQ(report.tests[0].p_adj, report.tests[0].p_raw);
  EXPECT_TRUE(report.violation_detected());
  EXPECT_EQ(std::count(report.bin_mask.begin(), report.bin_mask.end(), true), 1);
  EXPECT_EQ(std::count(report.sample_labels1.begin(), report.sample_labels1.end(), true), 30);
  EXPECT_EQ(std::count(report.sample_labels0.begin(), report.sample_labels0.end(), true), 0);
  EXPECT_EQ(report.sample_labels0.size(), 500u);
  EXPECT_EQ(report.sample_labels1.size(), 500u);
}

TEST(Detect, InvariantsOnRandomHistograms) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto h = random_hist(rng, 10);
    std::vector<double> scores;
    std::vector<int> t;
    scores_from_hist(h, scores, t);
    Config config;
    config.noise_threshold = rng.below(3);
    config.alpha = 0.5;
    config.test_kind = trial % 2 ? TestKind::kFisherExact : TestKind::kProportionZ;
    const auto report = detect(h, config, scores, t);
    for (const auto& test : report.tests) {
      EXPECT_GE(test.p_adj, test.p_raw);
      EXPECT_GE(test.p_raw, 0.0);
      EXPECT_LE(test.p_adj, 1.0);
      EXPECT_NE(test.k0 <= config.noise_threshold, test.k1 <= config.noise_threshold);
      EXPECT_EQ(report.bin_mask[test.bin], test.p_adj < config.alpha);
    }
    std::size_t flagged = 0;
    for (bool b : report.bin_mask) flagged += b;
    EXPECT_EQ(flagged, report.significant_count());

    std::size_t i0 = 0, i1 = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const std::size_t bin = bin_index(scores[i], h.bins);
      const bool label = t[i] ? report.sample_labels1[i1++] : report.sample_labels0[i0++];
      EXPECT_EQ(label, report.bin_mask[bin] && h.counts(t[i])[bin] > config.noise_threshold);
    }
  }
}

TEST(Detect, RejectionSetGrowsWithAlpha) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto h = random_hist(rng, 30);
    std::vector<double> scores;
    std::vector<int> t;
    scores_from_hist(h, scores, t);
    Config strict;
    strict.alpha = 0.01;
    Config loose = strict;
    loose.alpha = 0.2;
    const auto a = detect(h, strict, scores, t);
    const auto b = detect(h, loose, scores, t);
    for (std::size_t i = 0; i < h.bins; ++i) {
      EXPECT_TRUE(!a.bin_mask[i] || b.bin_mask[i]);
    }
  }
}

TEST(Detect, InconsistentInputsThrow) {
  const auto h = make_hist({1, 0}, {0, 1});
  const std::vector<double> scores{0.1};
  const std::vector<int> t{0};
  EXPECT_THROW(detect(h, Config{}, scores, t), std::invalid_argument);
}

TEST(Detect, CoinFlipDataRarelyRejects) {
  int rejections = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset ds = generate(SynthSpec::coin_flip(20000, seed));
    const Config config;
    const auto scores = fit_predict(ds, config).scores;
    const auto h = estimate_histograms(scores, ds.treatment(), config.bins);
    rejections += detect(h, config, scores, ds.treatment()).violation_detected();
  }
  EXPECT_LE(rejections, 1);
}
