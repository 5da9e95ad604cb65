#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "prehoc/error.hpp"
#include "prehoc/taxonomy.hpp"

namespace prehoc {

enum class ColumnKind { Numerical, Categorical };

enum class TaskType { BinaryClassification, MulticlassClassification, Regression };

inline std::string_view to_string(ColumnKind kind) {
  return kind == ColumnKind::Numerical ? "Numerical" : "Categorical";
}

inline std::string_view to_string(TaskType task) {
  switch (task) {
    case TaskType::BinaryClassification: return "BinaryClassification";
    case TaskType::MulticlassClassification: return "MulticlassClassification";
    case TaskType::Regression: return "Regression";
  }
  return "";
}

/// Numerical targets with at most this many distinct integer values are
/// treated as class labels.
inline constexpr std::size_t kClassCardinalityThreshold = 28;

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::Numerical;
  std::size_t missing_count = 0;

  bool operator==(const ColumnSchema&) const = default;
};

struct Missing {
  bool operator==(const Missing&) const = default;
};

using Cell = std::variant<Missing, double, std::string>;

inline bool is_missing(const Cell& cell) { return std::holds_alternative<Missing>(cell); }

/// Immutable once loaded. Cells of Numerical columns hold doubles, cells of
/// Categorical columns hold the original text.
struct TabularDataset {
  std::string id;
  std::vector<ColumnSchema> columns;
  std::vector<std::vector<Cell>> rows;
  std::size_t target_index = 0;
  TaskType task = TaskType::BinaryClassification;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_columns() const { return columns.size(); }
  const ColumnSchema& target() const { return columns[target_index]; }

  std::vector<std::size_t> feature_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c != target_index) out.push_back(c);
    }
    return out;
  }

  /// Non-missing values of a Numerical column, in row order.
  std::vector<double> numeric_values(std::size_t column) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
      if (const auto* v = std::get_if<double>(&row[column])) out.push_back(*v);
    }
    return out;
  }

  std::size_t total_missing() const {
    std::size_t n = 0;
    for (const auto& row : rows) n += static_cast<std::size_t>(std::count_if(row.begin(), row.end(), is_missing));
    return n;
  }
};

namespace csv {

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline bool is_missing_token(std::string_view raw) {
  static constexpr std::string_view kSentinels[] = {"na", "n/a", "?", "nan", "null"};
  auto t = trim(raw);
  if (t.empty()) return true;
  if (t.size() > 4) return false;
  std::string low = detail::lower(t);
  return std::find(std::begin(kSentinels), std::end(kSentinels), low) != std::end(kSentinels);
}

/// Parses a whole token as a finite decimal number.
inline std::optional<double> parse_number(std::string_view raw) {
  auto t = trim(raw);
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  if (t.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

using Record = std::vector<std::string>;

/// Splits RFC-4180 text into records. Quoted fields may contain commas,
/// doubled quotes and line breaks. Lines that are entirely empty are skipped.
inline std::vector<Record> parse_records(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    current.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    if (current.empty() && !field_started && field.empty()) return;
    end_field();
    records.push_back(std::move(current));
    current.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;  // a separator implies a following field
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  end_record();
  return records;
}

inline std::string quote_if_needed(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace csv

/// Binary iff exactly two distinct target values; Multiclass for categorical
/// targets or integer-valued numeric targets with at most
/// kClassCardinalityThreshold values; Regression otherwise.
inline TaskType infer_task(const TabularDataset& dataset) {
  const auto t = dataset.target_index;
  if (dataset.columns[t].kind == ColumnKind::Categorical) {
    std::set<std::string> distinct;
    for (const auto& row : dataset.rows) {
      if (const auto* s = std::get_if<std::string>(&row[t])) distinct.insert(*s);
    }
    if (distinct.size() < 2) throw Error(ErrorCode::DegenerateTarget, "target has fewer than 2 distinct values");
    return distinct.size() == 2 ? TaskType::BinaryClassification : TaskType::MulticlassClassification;
  }
  std::set<double> distinct;
  bool integral = true;
  for (const auto& row : dataset.rows) {
    if (const auto* v = std::get_if<double>(&row[t])) {
      distinct.insert(*v);
      if (*v != std::floor(*v)) integral = false;
    }
  }
  if (distinct.size() < 2) throw Error(ErrorCode::DegenerateTarget, "target has fewer than 2 distinct values");
  if (distinct.size() == 2) return TaskType::BinaryClassification;
  if (integral && distinct.size() <= kClassCardinalityThreshold) return TaskType::MulticlassClassification;
  return TaskType::Regression;
}

/// Builds a dataset from CSV text. The last column is the target when
/// `target_name` is empty. RaggedRow carries the 0-based data-row index.
inline TabularDataset parse_dataset(std::string_view text, std::string id,
                                    std::optional<std::string> target_name = std::nullopt) {
  auto records = csv::parse_records(text);
  if (records.empty()) throw Error(ErrorCode::HeaderMissing, "no header row in " + id);
  const auto& header = records.front();
  const std::size_t width = header.size();

  TabularDataset ds;
  ds.id = std::move(id);
  for (const auto& name : header) ds.columns.push_back(ColumnSchema{std::string(csv::trim(name)), ColumnKind::Numerical, 0});

  if (target_name) {
    auto it = std::find_if(ds.columns.begin(), ds.columns.end(),
                           [&](const ColumnSchema& c) { return c.name == *target_name; });
    if (it == ds.columns.end()) throw Error(ErrorCode::TargetNotFound, *target_name);
    ds.target_index = static_cast<std::size_t>(it - ds.columns.begin());
  } else {
    ds.target_index = width - 1;
  }

  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != width) {
      throw Error(ErrorCode::RaggedRow,
                  "row " + std::to_string(r - 1) + " has " + std::to_string(records[r].size()) +
                      " cells, header has " + std::to_string(width),
                  r - 1);
    }
  }

  // Kind inference looks at every non-missing cell, so it cannot depend on row order.
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t r = 1; r < records.size(); ++r) {
      const auto& raw = records[r][c];
      if (csv::is_missing_token(raw)) {
        ++ds.columns[c].missing_count;
      } else if (!csv::parse_number(raw)) {
        ds.columns[c].kind = ColumnKind::Categorical;
      }
    }
  }

  ds.rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    std::vector<Cell> row;
    row.reserve(width);
    for (std::size_t c = 0; c < width; ++c) {
      const auto& raw = records[r][c];
      if (csv::is_missing_token(raw)) {
        row.emplace_back(Missing{});
      } else if (ds.columns[c].kind == ColumnKind::Numerical) {
        row.emplace_back(*csv::parse_number(raw));
      } else {
        row.emplace_back(raw);
      }
    }
    ds.rows.push_back(std::move(row));
  }

  ds.task = infer_task(ds);
  return ds;
}

inline TabularDataset load_dataset(const std::filesystem::path& path,
                                   std::optional<std::string> target_name = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileUnreadable, path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::FileUnreadable, path.string());
  return parse_dataset(buf.str(), path.stem().string(), std::move(target_name));
}

/// Writes the dataset back as CSV; missing cells become empty fields.
inline std::string to_csv(const TabularDataset& ds) {
  std::string out;
  for (std::size_t c = 0; c < ds.columns.size(); ++c) {
    if (c) out.push_back(',');
    out += csv::quote_if_needed(ds.columns[c].name);
  }
  out.push_back('\n');
  for (const auto& row : ds.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out.push_back(',');
      if (const auto* v = std::get_if<double>(&row[c])) {
        out += csv::format_number(*v);
      } else if (const auto* s = std::get_if<std::string>(&row[c])) {
        out += csv::quote_if_needed(*s);
      }
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace prehoc
