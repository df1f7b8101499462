#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "positivity/dataset.hpp"
#include "positivity/propensity.hpp"
#include "positivity/random.hpp"

namespace positivity {

enum class Distribution { kUniform, kNormal };

// Uniform on [a, b], or normal with mean a and standard deviation b.
struct CovariateSpec {
  std::string name;
  Distribution distribution = Distribution::kUniform;
  double a = 0.0;
  double b = 1.0;
};

// Half-open interval low < x <= high on one covariate.
struct Bound {
  std::string feature;
  double low = 0.0;
  double high = 0.0;
};

enum class CarveMode {
  kReassign,  // carved treated samples become controls; n is preserved
  kDelete,    // carved treated samples are dropped
};

struct SynthSpec {
  std::size_t n = 20000;
  std::uint64_t seed = 0;
  std::vector<CovariateSpec> covariates;
  // Treatment logit = intercept + sum_j coefficients[j] * x_j (raw units).
  double intercept = 0.0;
  std::vector<double> coefficients;
  std::vector<Bound> carve;
  CarveMode carve_mode = CarveMode::kReassign;

  // Email-campaign design: the exposure group loses everyone whose profile is
  // 1500-1800 days old and who received an email within the last 50 days.
  static SynthSpec email_campaign(std::size_t n = 20000, std::uint64_t seed = 0, std::size_t noise_covariates = 0) {
    SynthSpec spec;
    spec.n = n;
    spec.seed = seed;
    spec.covariates = {{"profile_age", Distribution::kUniform, 0.0, 3000.0},
                       {"days_since_last_email", Distribution::kUniform, 0.0, 365.0}};
    spec.intercept = -0.5;
    spec.coefficients = {0.0004, 0.002};
    for (std::size_t k = 0; k < noise_covariates; ++k) {
      spec.covariates.push_back({"noise_" + std::to_string(k + 1), Distribution::kNormal, 0.0, 1.0});
      spec.coefficients.push_back(0.0);
    }
    spec.carve = {{"profile_age", 1500.0, 1800.0}, {"days_since_last_email", 0.0, 50.0}};
    return spec;
  }

  // Randomized design: treatment is a fair coin independent of covariates.
  static SynthSpec coin_flip(std::size_t n = 20000, std::uint64_t seed = 0, std::size_t noise_covariates = 0) {
    SynthSpec spec = email_campaign(n, seed, noise_covariates);
    spec.intercept = 0.0;
    std::fill(spec.coefficients.begin(), spec.coefficients.end(), 0.0);
    spec.carve.clear();
    return spec;
  }
};

inline std::vector<std::size_t> resolve_bounds(const std::vector<Bound>& bounds,
                                               const std::vector<std::string>& names) {
  std::vector<std::size_t> index;
  for (const auto& b : bounds) {
    std::size_t j = 0;
    while (j < names.size() && names[j] != b.feature) ++j;
    if (j == names.size()) throw std::invalid_argument("carve region references unknown feature '" + b.feature + "'");
    if (!std::isfinite(b.low) || !std::isfinite(b.high) || !(b.low < b.high)) {
      throw std::invalid_argument("carve bounds for '" + b.feature + "' must be finite with low < high");
    }
    index.push_back(j);
  }
  return index;
}

inline bool in_region(std::span<const double> x, const std::vector<Bound>& bounds,
                      const std::vector<std::size_t>& index) {
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    const double v = x[index[k]];
    if (!(v > bounds[k].low && v <= bounds[k].high)) return false;
  }
  return !bounds.empty();
}

inline Dataset generate(const SynthSpec& spec) {
  const std::size_t d = spec.covariates.size();
  if (d == 0) throw std::invalid_argument("synth spec needs at least one covariate");
  if (spec.coefficients.size() != d) throw std::invalid_argument("one logit coefficient per covariate required");
  std::vector<std::string> names;
  for (const auto& c : spec.covariates) names.push_back(c.name);
  const auto carve_index = resolve_bounds(spec.carve, names);

  Rng rng(spec.seed);
  std::vector<double> data;
  data.reserve(spec.n * d);
  std::vector<int> treatment;
  treatment.reserve(spec.n);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double z = spec.intercept;
    for (std::size_t j = 0; j < d; ++j) {
      const auto& c = spec.covariates[j];
      row[j] = c.distribution == Distribution::kUniform ? rng.uniform(c.a, c.b) : c.a + c.b * rng.normal();
      z += spec.coefficients[j] * row[j];
    }
    int t = rng.bernoulli(sigmoid(z)) ? 1 : 0;
    if (t == 1 && in_region(row, spec.carve, carve_index)) {
      if (spec.carve_mode == CarveMode::kDelete) continue;
      t = 0;
    }
    data.insert(data.end(), row.begin(), row.end());
    treatment.push_back(t);
  }
  const std::size_t n = treatment.size();
  return Dataset(Matrix(n, d, std::move(data)), std::move(names), std::move(treatment));
}

}  // namespace positivity
