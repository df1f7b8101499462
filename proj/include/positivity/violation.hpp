#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "positivity/config.hpp"
#include "positivity/density.hpp"
#include "positivity/stats.hpp"

namespace positivity {

struct BinTest {
  std::size_t bin = 0;
  std::size_t k0 = 0;
  std::size_t k1 = 0;
  double p_raw = 1.0;
  double p_adj = 1.0;
  bool significant = false;

  bool operator==(const BinTest&) const = default;
};

struct ViolationReport {
  std::vector<std::size_t> suspected;
  std::vector<BinTest> tests;
  std::vector<bool> bin_mask;
  // Per-sample labels for each group, over that group's rows in dataset order.
  std::vector<bool> sample_labels0;
  std::vector<bool> sample_labels1;

  bool violation_detected() const {
    for (bool b : bin_mask) {
      if (b) return true;
    }
    return false;
  }

  std::size_t significant_count() const {
    std::size_t count = 0;
    for (const auto& t : tests) count += t.significant;
    return count;
  }

  const std::vector<bool>& sample_labels(int group) const {
    return group == 0 ? sample_labels0 : sample_labels1;
  }
};

// Bins where exactly one group's count exceeds the noise threshold.
inline std::vector<std::size_t> violation_bins(const GroupHistograms& hist, std::size_t noise_threshold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < hist.bins; ++i) {
    const bool present0 = hist.counts0[i] > noise_threshold;
    const bool present1 = hist.counts1[i] > noise_threshold;
    if (present0 != present1) out.push_back(i);
  }
  return out;
}

inline double bin_test(TestKind kind, std::size_t k0, std::size_t n0, std::size_t k1, std::size_t n1) {
  return kind == TestKind::kFisherExact ? fisher_exact_test(k0, n0, k1, n1)
                                        : two_proportion_test(k0, n0, k1, n1);
}

// Tests each suspected bin, corrects over the |v| tests with BH at level
// alpha, and labels the samples of significant bins.
inline ViolationReport detect(const GroupHistograms& hist, const Config& config, std::span<const double> scores,
                              std::span<const int> treatment) {
  if (scores.size() != treatment.size() || scores.size() != hist.n0 + hist.n1) {
    throw std::invalid_argument("detect: scores, treatment and histograms disagree on sample count");
  }
  ViolationReport report;
  report.suspected = violation_bins(hist, config.noise_threshold);
  report.bin_mask.assign(hist.bins, false);

  std::vector<double> raw;
  raw.reserve(report.suspected.size());
  for (std::size_t bin : report.suspected) {
    BinTest t;
    t.bin = bin;
    t.k0 = hist.counts0[bin];
    t.k1 = hist.counts1[bin];
    t.p_raw = bin_test(config.test_kind, t.k0, hist.n0, t.k1, hist.n1);
    raw.push_back(t.p_raw);
    report.tests.push_back(t);
  }
  const auto adjusted = bh_fdr(raw);
  for (std::size_t k = 0; k < report.tests.size(); ++k) {
    auto& t = report.tests[k];
    t.p_adj = adjusted[k];
    t.significant = t.p_adj < config.alpha;
    if (t.significant) report.bin_mask[t.bin] = true;
  }

  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::size_t bin = bin_index(scores[i], hist.bins);
    const int group = treatment[i];
    const bool label = report.bin_mask[bin] && hist.counts(group)[bin] > config.noise_threshold;
    (group == 1 ? report.sample_labels1 : report.sample_labels0).push_back(label);
  }
  return report;
}

}  // namespace positivity
