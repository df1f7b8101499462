#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace positivity {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace detail {

inline void check_counts(std::size_t k0, std::size_t n0, std::size_t k1, std::size_t n1) {
  if (n0 == 0 || n1 == 0) throw std::invalid_argument("group sizes must be >= 1");
  if (k0 > n0 || k1 > n1) throw std::invalid_argument("bin count exceeds group size");
}

inline double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace detail

// Two-sided pooled two-proportion z-test of k0/n0 against k1/n1, no
// continuity correction. A zero pooled variance (k0 + k1 == 0, or both
// groups saturated) returns p = 1.
inline double two_proportion_test(std::size_t k0, std::size_t n0, std::size_t k1, std::size_t n1) {
  detail::check_counts(k0, n0, k1, n1);
  const double a = static_cast<double>(n0);
  const double b = static_cast<double>(n1);
  const double pooled = static_cast<double>(k0 + k1) / (a + b);
  const double variance = pooled * (1.0 - pooled) * (1.0 / a + 1.0 / b);
  if (!(variance > 0.0)) return 1.0;
  const double z = (static_cast<double>(k0) / a - static_cast<double>(k1) / b) / std::sqrt(variance);
  return std::min(1.0, std::erfc(std::abs(z) / std::numbers::sqrt2));
}

// Two-sided Fisher exact test on [[k0, n0-k0], [k1, n1-k1]]: the total
// hypergeometric mass (fixed margins) of tables no more likely than the
// observed one, with a 1e-7 relative tolerance on that comparison.
inline double fisher_exact_test(std::size_t k0, std::size_t n0, std::size_t k1, std::size_t n1) {
  detail::check_counts(k0, n0, k1, n1);
  // Canonical row order makes the result exactly symmetric in the groups.
  if (std::pair(n0, k0) > std::pair(n1, k1)) {
    std::swap(n0, n1);
    std::swap(k0, k1);
  }
  const std::size_t column = k0 + k1;
  const std::size_t total = n0 + n1;
  const std::size_t lo = column > n1 ? column - n1 : 0;
  const std::size_t hi = std::min(column, n0);
  if (lo == hi) return 1.0;

  const double dn0 = static_cast<double>(n0);
  const double dn1 = static_cast<double>(n1);
  const double dcol = static_cast<double>(column);
  const double log_denominator = detail::log_choose(static_cast<double>(total), dcol);
  auto log_prob = [&](std::size_t x) {
    const double dx = static_cast<double>(x);
    return detail::log_choose(dn0, dx) + detail::log_choose(dn1, dcol - dx) - log_denominator;
  };

  const double cutoff = log_prob(k0) + std::log1p(1e-7);
  double p = 0.0;
  for (std::size_t x = lo; x <= hi; ++x) {
    const double lp = log_prob(x);
    if (lp <= cutoff) p += std::exp(lp);
  }
  return std::min(1.0, p);
}

// Benjamini-Hochberg step-up adjusted p-values, in input order:
// adjusted(k) = min over j >= k of min(1, p(j) * m / j) on the sorted list.
inline std::vector<double> bh_fdr(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p-value outside [0,1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> adjusted(m);
  double running = 1.0;
  for (std::size_t rank = m; rank >= 1; --rank) {
    const std::size_t i = order[rank - 1];
    // m / rank >= 1 exactly, so the product never rounds below p.
    const double candidate =
        std::min(1.0, p_values[i] * (static_cast<double>(m) / static_cast<double>(rank)));
    running = std::min(running, candidate);
    adjusted[i] = running;
  }
  return adjusted;
}

}  // namespace positivity
