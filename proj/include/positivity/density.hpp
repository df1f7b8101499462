#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace positivity {

// Per-treatment-group counts over H equal-width bins of [0,1].
// Bin i covers [i/H, (i+1)/H); the last bin also includes 1.
struct GroupHistograms {
  std::size_t bins = 0;
  std::vector<std::size_t> counts0;
  std::vector<std::size_t> counts1;
  std::size_t n0 = 0;
  std::size_t n1 = 0;

  const std::vector<std::size_t>& counts(int group) const { return group == 0 ? counts0 : counts1; }
  std::size_t group_size(int group) const { return group == 0 ? n0 : n1; }

  bool operator==(const GroupHistograms&) const = default;
};

inline std::size_t bin_index(double score, std::size_t bins) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw std::domain_error("propensity score " + std::to_string(score) + " outside [0,1]");
  }
  const auto index = static_cast<std::size_t>(std::floor(score * static_cast<double>(bins)));
  return index < bins ? index : bins - 1;
}

inline GroupHistograms estimate_histograms(std::span<const double> scores, std::span<const int> treatment,
                                           std::size_t bins) {
  if (scores.size() != treatment.size()) throw std::invalid_argument("scores and treatment lengths differ");
  if (bins < 2) throw std::invalid_argument("histogram needs at least 2 bins");
  GroupHistograms hist;
  hist.bins = bins;
  hist.counts0.assign(bins, 0);
  hist.counts1.assign(bins, 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::size_t b = bin_index(scores[i], bins);
    if (treatment[i] == 1) {
      ++hist.counts1[b];
      ++hist.n1;
    } else {
      ++hist.counts0[b];
      ++hist.n0;
    }
  }
  return hist;
}

}  // namespace positivity
