#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "positivity/config.hpp"
#include "positivity/dataset.hpp"
#include "positivity/random.hpp"

namespace positivity {

struct Standardization {
  double mean = 0.0;
  double stddev = 1.0;
  bool operator==(const Standardization&) const = default;
};

// Equal-width indicator cells over each feature's training range, at several
// resolutions: one cell per feature (main effect) and one per feature pair
// (interaction). Constant features are excluded.
struct GridBasis {
  std::vector<std::size_t> resolutions;
  std::vector<double> low;
  std::vector<double> high;
  std::vector<std::size_t> active;

  static constexpr std::size_t kMaxCells = 5'000'000;

  std::size_t size() const {
    const std::size_t a = active.size();
    std::size_t total = 0;
    for (std::size_t q : resolutions) total += a * q + a * (a - 1) / 2 * q * q;
    return total;
  }

  std::size_t cells_per_row() const {
    const std::size_t a = active.size();
    return resolutions.size() * (a + a * (a - 1) / 2);
  }

  std::size_t bin(double x, std::size_t feature, std::size_t q) const {
    const double lo = low[feature];
    const double hi = high[feature];
    if (!(x > lo)) return 0;
    const double pos = (x - lo) / (hi - lo) * static_cast<double>(q);
    if (!(pos < static_cast<double>(q))) return q - 1;
    return static_cast<std::size_t>(pos);
  }

  void cells_for_row(std::span<const double> x, std::vector<std::size_t>& out) const {
    std::size_t offset = 0;
    std::vector<std::size_t> bins(active.size());
    for (std::size_t q : resolutions) {
      for (std::size_t a = 0; a < active.size(); ++a) {
        bins[a] = bin(x[active[a]], active[a], q);
        out.push_back(offset + bins[a]);
        offset += q;
      }
      for (std::size_t a = 0; a < active.size(); ++a) {
        for (std::size_t b = a + 1; b < active.size(); ++b) {
          out.push_back(offset + bins[a] * q + bins[b]);
          offset += q * q;
        }
      }
    }
  }

  bool operator==(const GridBasis&) const = default;
};

struct FitSummary {
  bool converged = false;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  double loss = 0.0;
};

struct PropensityModel {
  std::vector<std::string> feature_names;
  std::vector<Standardization> standardization;
  std::vector<double> weights;
  double intercept = 0.0;
  double l2_lambda = 0.0;
  GridBasis grid;
  std::vector<double> cell_weights;
  FitSummary fit;
};

struct PropensityResult {
  std::vector<double> scores;
  double auc = 0.5;
  double log_loss = 0.0;
  std::size_t folds = 1;
  std::vector<FitSummary> fits;
};

struct FitOptions {
  double l2_lambda = 1e-4;
  double tol = 1e-8;
  std::size_t max_iter = 1000;
  std::vector<std::size_t> grid_resolutions;
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Keeps probabilities strictly inside (0,1) where exp under/overflows.
inline double clamp_open_unit(double p) {
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(p, lo, hi);
}

// Design matrix in the form the objective consumes: standardized dense
// columns for the non-constant raw features plus sparse grid cell indices.
class Design {
 public:
  Design(const Dataset& dataset, const std::vector<Standardization>& standardization,
         const std::vector<std::size_t>& linear_features, const GridBasis& grid)
      : rows_(dataset.size()),
        linear_count_(linear_features.size()),
        cells_per_row_(grid.cells_per_row()) {
    linear_.resize(rows_ * linear_count_);
    cells_.reserve(rows_ * cells_per_row_);
    for (std::size_t i = 0; i < rows_; ++i) {
      const auto x = dataset.features().row(i);
      for (std::size_t a = 0; a < linear_count_; ++a) {
        const std::size_t j = linear_features[a];
        linear_[i * linear_count_ + a] = (x[j] - standardization[j].mean) / standardization[j].stddev;
      }
      if (cells_per_row_ > 0) grid.cells_for_row(x, cells_);
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t linear_count() const { return linear_count_; }
  std::span<const double> linear(std::size_t i) const {
    return {linear_.data() + i * linear_count_, linear_count_};
  }
  std::span<const std::size_t> cells(std::size_t i) const {
    return {cells_.data() + i * cells_per_row_, cells_per_row_};
  }

 private:
  std::size_t rows_;
  std::size_t linear_count_;
  std::size_t cells_per_row_;
  std::vector<double> linear_;
  std::vector<std::size_t> cells_;
};

// Penalized mean negative log-likelihood of L2 logistic regression.
// Parameter layout: [intercept, linear weights..., cell weights...]; the
// intercept is not penalized.
class LogisticObjective {
 public:
  LogisticObjective(const Design& design, std::span<const int> labels, std::size_t cell_count,
                    double l2_lambda)
      : design_(design), labels_(labels), cell_count_(cell_count), l2_lambda_(l2_lambda) {}

  std::size_t parameter_count() const { return 1 + design_.linear_count() + cell_count_; }

  double linear_predictor(std::span<const double> theta, std::size_t i) const {
    double z = theta[0];
    const auto x = design_.linear(i);
    for (std::size_t a = 0; a < x.size(); ++a) z += theta[1 + a] * x[a];
    const std::size_t base = 1 + design_.linear_count();
    for (std::size_t c : design_.cells(i)) z += theta[base + c];
    return z;
  }

  double value(std::span<const double> theta) const {
    std::vector<double> unused(parameter_count());
    return evaluate(theta, unused);
  }

  // Returns the loss and writes its gradient.
  double evaluate(std::span<const double> theta, std::span<double> gradient) const {
    std::fill(gradient.begin(), gradient.end(), 0.0);
    const std::size_t n = design_.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    const std::size_t base = 1 + design_.linear_count();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = linear_predictor(theta, i);
      const double y = labels_[i];
      loss += softplus(z) - y * z;
      const double residual = (sigmoid(z) - y) * inv_n;
      gradient[0] += residual;
      const auto x = design_.linear(i);
      for (std::size_t a = 0; a < x.size(); ++a) gradient[1 + a] += residual * x[a];
      for (std::size_t c : design_.cells(i)) gradient[base + c] += residual;
    }
    loss *= inv_n;
    double penalty = 0.0;
    for (std::size_t k = 1; k < theta.size(); ++k) {
      penalty += theta[k] * theta[k];
      gradient[k] += l2_lambda_ * theta[k];
    }
    return loss + 0.5 * l2_lambda_ * penalty;
  }

 private:
  const Design& design_;
  std::span<const int> labels_;
  std::size_t cell_count_;
  double l2_lambda_;
};

namespace detail {

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Full-batch L-BFGS with Armijo backtracking; stops when the gradient
// max-norm drops below tol.
inline FitSummary minimize_lbfgs(const LogisticObjective& objective, std::vector<double>& theta,
                                 double tol, std::size_t max_iter) {
  constexpr std::size_t kMemory = 10;
  constexpr double kArmijo = 1e-4;
  const std::size_t p = theta.size();

  std::vector<double> gradient(p);
  std::vector<double> direction(p);
  std::vector<double> next(p);
  std::vector<double> next_gradient(p);
  std::deque<std::vector<double>> s_hist;
  std::deque<std::vector<double>> y_hist;
  std::deque<double> rho_hist;
  std::vector<double> alpha(kMemory);

  FitSummary summary;
  double loss = objective.evaluate(theta, gradient);
  if (!std::isfinite(loss)) throw std::runtime_error("non-finite loss during propensity optimization");

  for (std::size_t iter = 0;; ++iter) {
    summary.iterations = iter;
    summary.gradient_norm = max_abs(gradient);
    summary.loss = loss;
    if (summary.gradient_norm < tol) {
      summary.converged = true;
      return summary;
    }
    if (iter >= max_iter) return summary;

    // Two-loop recursion.
    for (std::size_t k = 0; k < p; ++k) direction[k] = -gradient[k];
    const std::size_t m = s_hist.size();
    for (std::size_t back = 0; back < m; ++back) {
      const std::size_t h = m - 1 - back;
      alpha[h] = rho_hist[h] * dot(s_hist[h], direction);
      for (std::size_t k = 0; k < p; ++k) direction[k] -= alpha[h] * y_hist[h][k];
    }
    double initial_step = 1.0;
    if (m > 0) {
      const double scale = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (double& v : direction) v *= scale;
    } else {
      initial_step = 1.0 / std::max(1.0, max_abs(gradient));
    }
    for (std::size_t h = 0; h < m; ++h) {
      const double b = rho_hist[h] * dot(y_hist[h], direction);
      for (std::size_t k = 0; k < p; ++k) direction[k] += (alpha[h] - b) * s_hist[h][k];
    }

    double slope = dot(gradient, direction);
    if (!(slope < 0.0)) {
      // Not a descent direction; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t k = 0; k < p; ++k) direction[k] = -gradient[k];
      slope = dot(gradient, direction);
      initial_step = 1.0 / std::max(1.0, max_abs(gradient));
    }

    double step = initial_step;
    double next_loss = 0.0;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      for (std::size_t k = 0; k < p; ++k) next[k] = theta[k] + step * direction[k];
      next_loss = objective.evaluate(next, next_gradient);
      if (!std::isfinite(next_loss)) {
        throw std::runtime_error("non-finite loss during propensity optimization");
      }
      if (next_loss <= loss + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No decrease representable in floating point: stationary to precision.
      return summary;
    }

    std::vector<double> s(p);
    std::vector<double> y(p);
    for (std::size_t k = 0; k < p; ++k) {
      s[k] = next[k] - theta[k];
      y[k] = next_gradient[k] - gradient[k];
    }
    const double sy = dot(s, y);
    if (sy > 1e-300) {
      if (s_hist.size() == kMemory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    theta.swap(next);
    gradient.swap(next_gradient);
    loss = next_loss;
  }
}

inline std::vector<std::size_t> linear_features(const PropensityModel& model) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < model.standardization.size(); ++j) {
    if (model.standardization[j].stddev > 0.0 && model.grid.low.size() > j &&
        model.grid.high[j] > model.grid.low[j]) {
      out.push_back(j);
    }
  }
  return out;
}

}  // namespace detail

// Fits L2-regularized logistic regression of treatment on the standardized
// features (plus the grid basis when grid_resolutions is non-empty).
inline PropensityModel fit(const Dataset& dataset, const FitOptions& options) {
  if (!(options.l2_lambda >= 0.0)) throw std::invalid_argument("l2_lambda must be >= 0");
  if (!(options.tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (dataset.size() == 0) throw std::invalid_argument("cannot fit on an empty dataset");

  const std::size_t n = dataset.size();
  const std::size_t d = dataset.dimension();
  PropensityModel model;
  model.feature_names = dataset.feature_names();
  model.l2_lambda = options.l2_lambda;
  model.standardization.resize(d);
  model.weights.assign(d, 0.0);
  model.grid.resolutions = options.grid_resolutions;
  model.grid.low.resize(d);
  model.grid.high.resize(d);

  for (std::size_t j = 0; j < d; ++j) {
    double lo = dataset.value(0, j);
    double hi = lo;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = dataset.value(i, j);
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      sum += x;
    }
    model.grid.low[j] = lo;
    model.grid.high[j] = hi;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = dataset.value(i, j) - mean;
      ss += dx * dx;
    }
    const double stddev = std::sqrt(ss / static_cast<double>(n));
    if (hi > lo && stddev > 0.0) {
      model.standardization[j] = {mean, stddev};
      model.grid.active.push_back(j);
    } else {
      model.standardization[j] = {mean, 1.0};
      model.grid.high[j] = lo;
    }
  }
  if (!model.grid.resolutions.empty() && model.grid.size() > GridBasis::kMaxCells) {
    throw std::invalid_argument("interaction grid needs " + std::to_string(model.grid.size()) +
                                " parameters; use coarser or no grid resolutions");
  }
  if (model.grid.resolutions.empty()) model.grid.active.clear();

  const auto linear = detail::linear_features(model);
  const Design design(dataset, model.standardization, linear, model.grid);
  const std::size_t cell_count = model.grid.resolutions.empty() ? 0 : model.grid.size();
  const LogisticObjective objective(design, dataset.treatment(), cell_count, options.l2_lambda);

  std::vector<double> theta(objective.parameter_count(), 0.0);
  const double mean_t = static_cast<double>(dataset.group_size(1)) / static_cast<double>(n);
  if (mean_t > 0.0 && mean_t < 1.0) theta[0] = logit(mean_t);

  model.fit = detail::minimize_lbfgs(objective, theta, options.tol, options.max_iter);
  model.intercept = theta[0];
  for (std::size_t a = 0; a < linear.size(); ++a) model.weights[linear[a]] = theta[1 + a];
  model.cell_weights.assign(theta.begin() + static_cast<std::ptrdiff_t>(1 + linear.size()), theta.end());
  return model;
}

inline double linear_predictor(const PropensityModel& model, std::span<const double> x,
                               std::vector<std::size_t>& scratch) {
  double z = model.intercept;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (model.weights[j] != 0.0) {
      z += model.weights[j] * (x[j] - model.standardization[j].mean) / model.standardization[j].stddev;
    }
  }
  if (!model.cell_weights.empty()) {
    scratch.clear();
    model.grid.cells_for_row(x, scratch);
    for (std::size_t c : scratch) z += model.cell_weights[c];
  }
  return z;
}

// Propensity scores sigmoid(intercept + w . standardized x + grid terms).
inline std::vector<double> predict(const PropensityModel& model, const Dataset& dataset) {
  if (dataset.feature_names() != model.feature_names) {
    throw std::invalid_argument("feature-name mismatch between model and dataset");
  }
  std::vector<double> scores(dataset.size());
  std::vector<std::size_t> scratch;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    scores[i] = clamp_open_unit(sigmoid(linear_predictor(model, dataset.features().row(i), scratch)));
  }
  return scores;
}

// Mann-Whitney AUC with ties counted one half.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  double positives = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += mid_rank;
        positives += 1.0;
      }
    }
    i = j;
  }
  const double negatives = static_cast<double>(scores.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) throw std::invalid_argument("auc needs both labels present");
  return (positive_rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

inline double log_loss(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty()) throw std::invalid_argument("log_loss: bad input");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = clamp_open_unit(scores[i]);
    total -= labels[i] == 1 ? std::log(s) : std::log1p(-s);
  }
  return total / static_cast<double>(scores.size());
}

// Fold id per row: a seeded permutation dealt round-robin into k folds.
inline std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);
  std::vector<std::size_t> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[perm[i]] = i % folds;
  return fold;
}

inline FitOptions fit_options(const Config& config) {
  return {config.l2_lambda, config.tol, config.max_iter, config.grid_resolutions};
}

// In-sample scores for one fold, out-of-fold scores otherwise.
inline PropensityResult fit_predict(const Dataset& dataset, const Config& config) {
  const std::size_t n = dataset.size();
  const std::size_t k = config.cross_fit_folds;
  if (k < 1) throw std::invalid_argument("cross_fit_folds must be >= 1");
  if (k > n) throw std::invalid_argument("cross_fit_folds exceeds the number of samples");

  PropensityResult result;
  result.folds = k;
  const FitOptions options = fit_options(config);
  if (k == 1) {
    const auto model = fit(dataset, options);
    result.scores = predict(model, dataset);
    result.fits.push_back(model.fit);
  } else {
    result.scores.assign(n, 0.5);
    const auto fold = fold_assignment(n, k, config.seed);
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::size_t> train;
      std::vector<std::size_t> held_out;
      for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? held_out : train).push_back(i);
      const auto model = fit(dataset.subset(train), options);
      const auto scores = predict(model, dataset.subset(held_out));
      for (std::size_t h = 0; h < held_out.size(); ++h) result.scores[held_out[h]] = scores[h];
      result.fits.push_back(model.fit);
    }
  }
  result.auc = auc(result.scores, dataset.treatment());
  result.log_loss = log_loss(result.scores, dataset.treatment());
  return result;
}

}  // namespace positivity
