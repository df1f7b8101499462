#include <gtest/gtest.h>

#include "positivity/synth.hpp"

using namespace positivity;

namespace {

bool in_carve(const Dataset& ds, std::size_t i) {
  const double age = ds.value(i, 0);
  const double days = ds.value(i, 1);
  return age > 1500 && age <= 1800 && days <= 50;
}

}  // namespace

TEST(Synth, CarvedRegionHasNoTreatedSamples) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset ds = generate(SynthSpec::email_campaign(20000, seed));
    ASSERT_EQ(ds.size(), 20000u);
    EXPECT_EQ(ds.feature_names(), (std::vector<std::string>{"profile_age", "days_since_last_email"}));
    std::size_t carved = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (!in_carve(ds, i)) continue;
      ++carved;
      EXPECT_EQ(ds.treatment()[i], 0);
    }
    // About 20000 * 0.1 * (50/365) samples fall in the region.
    EXPECT_GT(carved, 150u);
  }
}

TEST(Synth, DeleteModeDropsCarvedTreatedSamples) {
  auto spec = SynthSpec::email_campaign(5000, 1);
  spec.carve_mode = CarveMode::kDelete;
  const Dataset deleted = generate(spec);
  EXPECT_LT(deleted.size(), 5000u);
  for (std::size_t i = 0; i < deleted.size(); ++i) {
    EXPECT_TRUE(!in_carve(deleted, i) || deleted.treatment()[i] == 0);
  }
}

TEST(Synth, LabelsChangeOnlyInsideTheRegion) {
  auto uncarved = SynthSpec::email_campaign(20000, 7);
  uncarved.carve.clear();
  const Dataset with = generate(SynthSpec::email_campaign(20000, 7));
  const Dataset without = generate(uncarved);
  EXPECT_EQ(with.features(), without.features());
  std::size_t changed = 0;
  for (std::size_t i = 0; i < with.size(); ++i) {
    if (with.treatment()[i] != without.treatment()[i]) {
      ++changed;
      EXPECT_TRUE(in_carve(with, i));
    }
  }
  EXPECT_GT(changed, 0u);
}

TEST(Synth, CoinFlipIsBalanced) {
  const Dataset ds = generate(SynthSpec::coin_flip(20000, 0));
  const double share = static_cast<double>(ds.group_size(1)) / static_cast<double>(ds.size());
  EXPECT_GE(share, 0.48);
  EXPECT_LE(share, 0.52);
}

TEST(Synth, SameSeedSameData) {
  EXPECT_EQ(generate(SynthSpec::email_campaign(1000, 4, 2)), generate(SynthSpec::email_campaign(1000, 4, 2)));
  EXPECT_NE(generate(SynthSpec::email_campaign(1000, 4)), generate(SynthSpec::email_campaign(1000, 5)));
}

TEST(Synth, NoiseCovariatesAreAppended) {
  const Dataset ds = generate(SynthSpec::email_campaign(100, 0, 2));
  EXPECT_EQ(ds.feature_names(),
            (std::vector<std::string>{"profile_age", "days_since_last_email", "noise_1", "noise_2"}));
}

TEST(Synth, CovariatesStayInTheirRanges) {
  const Dataset ds = generate(SynthSpec::email_campaign(5000, 2));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_GT(ds.value(i, 0), 0.0);
    EXPECT_LT(ds.value(i, 0), 3000.0);
    EXPECT_GT(ds.value(i, 1), 0.0);
    EXPECT_LT(ds.value(i, 1), 365.0);
  }
}

TEST(Synth, RejectsBadSpecs) {
  auto spec = SynthSpec::email_campaign(10, 0);
  spec.carve.push_back({"missing", 0, 1});
  EXPECT_THROW(generate(spec), std::invalid_argument);
  spec = SynthSpec::email_campaign(10, 0);
  spec.carve[0].low = spec.carve[0].high;
  EXPECT_THROW(generate(spec), std::invalid_argument);
  spec = SynthSpec::email_campaign(10, 0);
  spec.coefficients.pop_back();
  EXPECT_THROW(generate(spec), std::invalid_argument);
}
