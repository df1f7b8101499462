#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "positivity/dataset.hpp"

namespace positivity {

enum class DataErrorKind {
  kIo,
  kMalformedCsv,
  kRaggedRow,
  kDuplicateColumn,
  kMissingTreatmentColumn,
  kInvalidTreatmentValue,
  kMissingCell,
  kUnparseableNumber,
  kNonFiniteValue,
  kTooManyCategories,
  kEmptyTreatmentGroup,
  kInvalidDataset,
};

class DataError : public std::runtime_error {
 public:
  DataError(DataErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  DataErrorKind kind() const { return kind_; }

 private:
  DataErrorKind kind_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180: comma separated, '"' quoting with "" escapes, LF or CRLF records.
inline CsvTable parse_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    // A blank line is not a record.
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw DataError(DataErrorKind::kMalformedCsv,
                          "line " + std::to_string(line) + ": unexpected quote inside unquoted field");
        }
        in_quotes = true;
        field_was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        ++line;
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (field_was_quoted) {
          throw DataError(DataErrorKind::kMalformedCsv,
                          "line " + std::to_string(line) + ": characters after closing quote");
        }
        field.push_back(c);
    }
  }
  if (in_quotes) {
    throw DataError(DataErrorKind::kMalformedCsv, "unterminated quoted field at end of input");
  }
  if (!field.empty() || field_was_quoted || !record.empty()) end_record();

  if (records.empty()) throw DataError(DataErrorKind::kMalformedCsv, "file has no header row");

  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw DataError(DataErrorKind::kRaggedRow,
                      "data row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                          " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Parses the whole cell as a number; "nan"/"inf" parse (and are rejected later).
inline bool parse_number(std::string_view cell, double& out) {
  cell = trim(cell);
  if (cell.starts_with('+')) cell.remove_prefix(1);
  if (cell.empty()) return false;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string format_double_exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

struct CsvOptions {
  std::size_t max_categories = 20;
};

// Numeric columns pass through; string columns with at most max_categories
// distinct values become "<col>=<value>" indicators (values in sorted order).
inline Dataset dataset_from_table(const CsvTable& table, std::string_view treatment_column,
                                  const CsvOptions& options = {}) {
  const auto& header = table.header;
  {
    std::vector<std::string> sorted = header;
    std::sort(sorted.begin(), sorted.end());
    const auto dup = std::adjacent_find(sorted.begin(), sorted.end());
    if (dup != sorted.end()) {
      throw DataError(DataErrorKind::kDuplicateColumn, "duplicate column '" + *dup + "'");
    }
  }
  const auto t_it = std::find(header.begin(), header.end(), treatment_column);
  if (t_it == header.end()) {
    throw DataError(DataErrorKind::kMissingTreatmentColumn,
                    "missing treatment column '" + std::string(treatment_column) + "'");
  }
  const auto t_col = static_cast<std::size_t>(t_it - header.begin());
  const std::size_t n = table.rows.size();

  std::vector<int> treatment(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::string cell = detail::lower(detail::trim(table.rows[r][t_col]));
    if (cell == "1" || cell == "true") {
      treatment[r] = 1;
    } else if (cell == "0" || cell == "false") {
      treatment[r] = 0;
    } else {
      throw DataError(DataErrorKind::kInvalidTreatmentValue,
                      "row " + std::to_string(r + 1) + ", column '" + header[t_col] +
                          "': treatment value '" + table.rows[r][t_col] + "' is not 0/1/true/false");
    }
  }
  for (int group : {0, 1}) {
    if (std::find(treatment.begin(), treatment.end(), group) == treatment.end()) {
      throw DataError(DataErrorKind::kEmptyTreatmentGroup,
                      "empty treatment group: no rows with treatment " + std::to_string(group));
    }
  }

  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == t_col) continue;
    std::vector<double> numeric(n);
    std::size_t parsed = 0;
    std::optional<std::size_t> first_failure;
    for (std::size_t r = 0; r < n; ++r) {
      const auto& cell = table.rows[r][c];
      if (detail::trim(cell).empty()) {
        throw DataError(DataErrorKind::kMissingCell,
                        "row " + std::to_string(r + 1) + ", column '" + header[c] + "': missing value");
      }
      if (detail::parse_number(cell, numeric[r])) {
        ++parsed;
      } else if (!first_failure) {
        first_failure = r;
      }
    }

    if (parsed == n) {
      for (std::size_t r = 0; r < n; ++r) {
        if (!std::isfinite(numeric[r])) {
          throw DataError(DataErrorKind::kNonFiniteValue, "row " + std::to_string(r + 1) + ", column '" +
                                                              header[c] + "': non-finite value '" +
                                                              table.rows[r][c] + "'");
        }
      }
      names.push_back(header[c]);
      columns.push_back(std::move(numeric));
      continue;
    }
    if (parsed > 0) {
      throw DataError(DataErrorKind::kUnparseableNumber,
                      "row " + std::to_string(*first_failure + 1) + ", column '" + header[c] +
                          "': unparseable numeric cell '" + table.rows[*first_failure][c] + "'");
    }

    std::map<std::string, std::size_t> levels;
    for (std::size_t r = 0; r < n; ++r) levels.emplace(table.rows[r][c], 0);
    if (levels.size() > options.max_categories) {
      throw DataError(DataErrorKind::kTooManyCategories,
                      "column '" + header[c] + "' has " + std::to_string(levels.size()) +
                          " distinct string values (limit " + std::to_string(options.max_categories) + ")");
    }
    std::size_t next = 0;
    for (auto& [value, index] : levels) {
      index = next++;
      names.push_back(header[c] + "=" + value);
      columns.emplace_back(n, 0.0);
    }
    const std::size_t base = columns.size() - levels.size();
    for (std::size_t r = 0; r < n; ++r) {
      columns[base + levels.at(table.rows[r][c])][r] = 1.0;
    }
  }

  const std::size_t d = columns.size();
  Matrix features(n, d);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t r = 0; r < n; ++r) features(r, j) = columns[j][r];
  }
  Dataset dataset(std::move(features), std::move(names), std::move(treatment));
  if (const auto diagnostics = validate(dataset); !diagnostics.empty()) {
    throw DataError(DataErrorKind::kInvalidDataset, diagnostics.front().message);
  }
  return dataset;
}

inline Dataset load_csv(const std::string& path, std::string_view treatment_column,
                        const CsvOptions& options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::kIo, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return dataset_from_table(parse_csv(buffer.str()), treatment_column, options);
}

// Writes the dataset in a form load_csv reads back exactly.
inline void write_csv(const Dataset& dataset, std::ostream& out,
                      std::string_view treatment_column = "treatment") {
  for (const auto& name : dataset.feature_names()) out << detail::quote_csv(name) << ',';
  out << detail::quote_csv(std::string(treatment_column)) << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (std::size_t j = 0; j < dataset.dimension(); ++j) {
      out << detail::format_double_exact(dataset.value(i, j)) << ',';
    }
    out << dataset.treatment()[i] << '\n';
  }
}

inline void write_csv(const Dataset& dataset, const std::string& path,
                      std::string_view treatment_column = "treatment") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataErrorKind::kIo, "cannot write '" + path + "'");
  write_csv(dataset, out, treatment_column);
  if (!out) throw DataError(DataErrorKind::kIo, "write failed for '" + path + "'");
}

}  // namespace positivity
