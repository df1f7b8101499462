#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace positivity {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw std::invalid_argument("matrix data size does not match its shape");
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Covariates X (n x d, named columns) and a binary treatment vector T.
// Immutable once constructed; the constructor only checks shapes, the
// remaining invariants are reported by validate().
class Dataset {
 public:
  Dataset() = default;
  Dataset(Matrix features, std::vector<std::string> feature_names, std::vector<int> treatment)
      : features_(std::move(features)),
        feature_names_(std::move(feature_names)),
        treatment_(std::move(treatment)) {
    if (features_.rows() != treatment_.size()) {
      throw std::invalid_argument("feature rows and treatment length differ");
    }
    if (features_.cols() != feature_names_.size()) {
      throw std::invalid_argument("feature columns and feature names differ");
    }
  }

  std::size_t size() const { return treatment_.size(); }
  std::size_t dimension() const { return feature_names_.size(); }

  const Matrix& features() const { return features_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<int>& treatment() const { return treatment_; }

  double value(std::size_t row, std::size_t col) const { return features_(row, col); }

  std::size_t group_size(int group) const {
    std::size_t count = 0;
    for (int t : treatment_) count += (t == group);
    return count;
  }

  // Row indices of one treatment group, in dataset order.
  std::vector<std::size_t> group_rows(int group) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < treatment_.size(); ++i) {
      if (treatment_[i] == group) rows.push_back(i);
    }
    return rows;
  }

  std::optional<std::size_t> feature_index(std::string_view name) const {
    for (std::size_t j = 0; j < feature_names_.size(); ++j) {
      if (feature_names_[j] == name) return j;
    }
    return std::nullopt;
  }

  Dataset subset(std::span<const std::size_t> rows) const {
    const std::size_t d = dimension();
    std::vector<double> data;
    data.reserve(rows.size() * d);
    std::vector<int> treatment;
    treatment.reserve(rows.size());
    for (std::size_t r : rows) {
      const auto src = features_.row(r);
      data.insert(data.end(), src.begin(), src.end());
      treatment.push_back(treatment_[r]);
    }
    return Dataset(Matrix(rows.size(), d, std::move(data)), feature_names_, std::move(treatment));
  }

  bool operator==(const Dataset&) const = default;

 private:
  Matrix features_;
  std::vector<std::string> feature_names_;
  std::vector<int> treatment_;
};

enum class DiagnosticKind {
  kNoSamples,
  kNoFeatures,
  kEmptyTreatmentGroup,
  kInvalidTreatmentValue,
  kNonFiniteValue,
  kEmptyFeatureName,
  kDuplicateFeatureName,
};

struct Diagnostic {
  DiagnosticKind kind;
  std::string message;
  std::optional<std::size_t> row;
  std::optional<std::size_t> column;
};

// One diagnostic per violated invariant; empty iff the dataset is valid.
inline std::vector<Diagnostic> validate(const Dataset& dataset) {
  std::vector<Diagnostic> out;
  const std::size_t n = dataset.size();
  const std::size_t d = dataset.dimension();
  if (n == 0) out.push_back({DiagnosticKind::kNoSamples, "dataset has no rows", {}, {}});
  if (d == 0) out.push_back({DiagnosticKind::kNoFeatures, "dataset has no feature columns", {}, {}});

  std::size_t bad_treatment = 0;
  std::optional<std::size_t> first_bad_treatment;
  for (std::size_t i = 0; i < n; ++i) {
    const int t = dataset.treatment()[i];
    if (t != 0 && t != 1) {
      if (!first_bad_treatment) first_bad_treatment = i;
      ++bad_treatment;
    }
  }
  if (bad_treatment > 0) {
    out.push_back({DiagnosticKind::kInvalidTreatmentValue,
                   "row " + std::to_string(*first_bad_treatment) + ": treatment value " +
                       std::to_string(dataset.treatment()[*first_bad_treatment]) +
                       " is not 0 or 1 (" + std::to_string(bad_treatment) + " such rows)",
                   first_bad_treatment, {}});
  }
  if (n > 0) {
    for (int group : {0, 1}) {
      if (dataset.group_size(group) == 0) {
        out.push_back({DiagnosticKind::kEmptyTreatmentGroup,
                       "empty treatment group: no rows with treatment " + std::to_string(group), {}, {}});
      }
    }
  }

  std::size_t non_finite = 0;
  std::optional<std::pair<std::size_t, std::size_t>> first_non_finite;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(dataset.value(i, j))) {
        if (!first_non_finite) first_non_finite = {i, j};
        ++non_finite;
      }
    }
  }
  if (first_non_finite) {
    const auto [row, col] = *first_non_finite;
    std::string message = "row " + std::to_string(row) + ", column '" + dataset.feature_names()[col] +
                          "': non-finite value";
    if (non_finite > 1) message += " (" + std::to_string(non_finite - 1) + " more non-finite cells)";
    out.push_back({DiagnosticKind::kNonFiniteValue, std::move(message), row, col});
  }

  std::unordered_set<std::string> seen;
  for (std::size_t j = 0; j < d; ++j) {
    const auto& name = dataset.feature_names()[j];
    if (name.empty()) {
      out.push_back({DiagnosticKind::kEmptyFeatureName,
                     "feature " + std::to_string(j) + " has an empty name", {}, j});
    } else if (!seen.insert(name).second) {
      out.push_back({DiagnosticKind::kDuplicateFeatureName,
                     "duplicate feature name '" + name + "'", {}, j});
    }
  }
  return out;
}

}  // namespace positivity
