#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace positivity {

enum class TestKind { kProportionZ, kFisherExact };

inline std::string_view to_string(TestKind kind) {
  return kind == TestKind::kProportionZ ? "proportion_z" : "fisher_exact";
}

inline TestKind test_kind_from_string(std::string_view name) {
  if (name == "proportion_z" || name == "z") return TestKind::kProportionZ;
  if (name == "fisher_exact" || name == "fisher") return TestKind::kFisherExact;
  throw std::invalid_argument("unknown test kind '" + std::string(name) + "'");
}

struct Config {
  std::size_t bins = 100;
  double alpha = 0.01;
  double beta = 0.90;
  double gamma = 0.01;
  std::size_t noise_threshold = 0;
  TestKind test_kind = TestKind::kProportionZ;
  std::size_t max_depth = 10;
  std::size_t cross_fit_folds = 1;
  std::uint64_t seed = 0;

  // Propensity model knobs.
  double l2_lambda = 1e-3;
  double tol = 1e-8;
  std::size_t max_iter = 1000;
  // Equal-width grid resolutions for the interaction basis; empty = linear model.
  std::vector<std::size_t> grid_resolutions = {10, 30};

  void check() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid config: " + what); };
    if (bins < 2) fail("bins must be >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must be in (0,1)");
    if (!(beta > 0.0 && beta < 1.0)) fail("beta must be in (0,1)");
    if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must be in (0,1)");
    if (max_depth < 1) fail("max_depth must be >= 1");
    if (cross_fit_folds < 1) fail("cross_fit_folds must be >= 1");
    if (!(l2_lambda >= 0.0)) fail("l2_lambda must be >= 0");
    if (!(tol > 0.0)) fail("tol must be > 0");
    for (std::size_t q : grid_resolutions) {
      if (q < 2) fail("grid resolutions must be >= 2");
    }
  }

  bool operator==(const Config&) const = default;
};

}  // namespace positivity
