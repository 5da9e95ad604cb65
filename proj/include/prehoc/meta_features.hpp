#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "prehoc/error.hpp"
#include "prehoc/stats.hpp"
#include "prehoc/tabular.hpp"

namespace prehoc {

/// The eleven statistical variables describing a dataset.
struct DatasetMetadata {
  std::uint64_t n_samples = 0;
  std::uint64_t n_features = 0;
  std::uint64_t n_numerical = 0;
  std::uint64_t n_categorical = 0;
  double class_imbalance = 0.0;
  std::uint64_t n_outliers = 0;
  double avg_skewness = 0.0;
  double avg_kurtosis = 0.0;
  double avg_variance = 0.0;
  std::uint64_t n_missing = 0;
  double target_entropy = 0.0;

  static constexpr std::size_t kDims = 11;

  bool operator==(const DatasetMetadata&) const = default;

  std::array<double, kDims> to_array() const {
    return {static_cast<double>(n_samples),   static_cast<double>(n_features),
            static_cast<double>(n_numerical), static_cast<double>(n_categorical),
            class_imbalance,                  static_cast<double>(n_outliers),
            avg_skewness,                     avg_kurtosis,
            avg_variance,                     static_cast<double>(n_missing),
            target_entropy};
  }

  std::vector<double> to_vector() const {
    auto a = to_array();
    return {a.begin(), a.end()};
  }
};

/// Serialized keys, in the fixed export order.
inline constexpr std::array<std::string_view, DatasetMetadata::kDims> kMetadataKeys = {
    "n_samples",    "n_features",   "n_numerical",  "n_categorical", "class_imbalance", "n_outliers",
    "avg_skewness", "avg_kurtosis", "avg_variance", "n_missing",     "target_entropy",
};

/// Names as they appear in prompts and reports.
inline constexpr std::array<std::string_view, DatasetMetadata::kDims> kMetadataDisplayNames = {
    "Number of samples", "Number of features", "Num. numerical features", "Num. categorical features",
    "Class imbalance",   "Number of outliers", "Average skewness",        "Average kurtosis",
    "Average variance",  "Number of missing values", "Target entropy",
};

inline constexpr std::size_t kRegressionEntropyBins = 10;

/// Per-class counts of the target column, ordered by class value. Empty for
/// regression targets.
inline std::vector<std::size_t> target_class_counts(const TabularDataset& ds) {
  std::vector<std::size_t> counts;
  if (ds.task == TaskType::Regression) return counts;
  std::map<std::string, std::size_t> by_text;
  std::map<double, std::size_t> by_value;
  for (const auto& row : ds.rows) {
    const auto& cell = row[ds.target_index];
    if (const auto* v = std::get_if<double>(&cell)) ++by_value[*v];
    else if (const auto* s = std::get_if<std::string>(&cell)) ++by_text[*s];
  }
  for (const auto& [_, c] : by_value) counts.push_back(c);
  for (const auto& [_, c] : by_text) counts.push_back(c);
  return counts;
}

/// Per-feature statistics skip missing cells and average over numerical
/// feature columns only; with no numerical feature the averages and the
/// outlier count are 0. n_missing counts every missing cell, target included.
inline DatasetMetadata compute_metadata(const TabularDataset& ds) {
  const auto features = ds.feature_indices();
  if (ds.n_rows() == 0 || features.empty()) {
    throw Error(ErrorCode::EmptyDataset, "dataset " + ds.id + " has no rows or no feature columns");
  }

  DatasetMetadata md;
  md.n_samples = ds.n_rows();
  md.n_features = features.size();

  double skew_sum = 0.0, kurt_sum = 0.0, var_sum = 0.0;
  for (auto c : features) {
    if (ds.columns[c].kind == ColumnKind::Categorical) {
      ++md.n_categorical;
      continue;
    }
    ++md.n_numerical;
    const auto values = ds.numeric_values(c);
    const auto moments = stats::central_moments(values);
    skew_sum += stats::skewness_from(moments);
    kurt_sum += stats::kurtosis_from(moments);
    var_sum += moments.variance();
    md.n_outliers += stats::count_outliers_iqr(values);
  }
  if (md.n_numerical > 0) {
    const auto n = static_cast<double>(md.n_numerical);
    md.avg_skewness = skew_sum / n;
    md.avg_kurtosis = kurt_sum / n;
    md.avg_variance = var_sum / n;
  }

  for (const auto& col : ds.columns) md.n_missing += col.missing_count;

  if (ds.task == TaskType::Regression) {
    md.class_imbalance = 0.0;
    auto hist = stats::histogram(ds.numeric_values(ds.target_index), kRegressionEntropyBins);
    std::erase(hist, std::size_t{0});
    md.target_entropy = hist.empty() ? 0.0 : stats::shannon_entropy(hist);
  } else {
    const auto counts = target_class_counts(ds);
    md.class_imbalance = stats::class_imbalance(counts);
    md.target_entropy = counts.empty() ? 0.0 : stats::shannon_entropy(counts);
  }
  return md;
}

inline nlohmann::ordered_json to_json(const DatasetMetadata& md) {
  nlohmann::ordered_json j;
  j["n_samples"] = md.n_samples;
  j["n_features"] = md.n_features;
  j["n_numerical"] = md.n_numerical;
  j["n_categorical"] = md.n_categorical;
  j["class_imbalance"] = md.class_imbalance;
  j["n_outliers"] = md.n_outliers;
  j["avg_skewness"] = md.avg_skewness;
  j["avg_kurtosis"] = md.avg_kurtosis;
  j["avg_variance"] = md.avg_variance;
  j["n_missing"] = md.n_missing;
  j["target_entropy"] = md.target_entropy;
  return j;
}

/// Throws SchemaViolation naming the first missing or mistyped key.
template <typename Json>
DatasetMetadata metadata_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaViolation, "metadata is not an object");
  auto count = [&](std::string_view key) -> std::uint64_t {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_unsigned()) {
      if (it != j.end() && it->is_number_integer() && it->template get<std::int64_t>() >= 0)
        return it->template get<std::uint64_t>();
      throw Error(ErrorCode::SchemaViolation, "metadata." + std::string(key) + " must be a non-negative integer");
    }
    return it->template get<std::uint64_t>();
  };
  auto real = [&](std::string_view key) -> double {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number()) {
      throw Error(ErrorCode::SchemaViolation, "metadata." + std::string(key) + " must be a number");
    }
    return it->template get<double>();
  };
  DatasetMetadata md;
  md.n_samples = count("n_samples");
  md.n_features = count("n_features");
  md.n_numerical = count("n_numerical");
  md.n_categorical = count("n_categorical");
  md.class_imbalance = real("class_imbalance");
  md.n_outliers = count("n_outliers");
  md.avg_skewness = real("avg_skewness");
  md.avg_kurtosis = real("avg_kurtosis");
  md.avg_variance = real("avg_variance");
  md.n_missing = count("n_missing");
  md.target_entropy = real("target_entropy");
  return md;
}

inline std::string metadata_csv_header() {
  std::string out;
  for (std::size_t i = 0; i < kMetadataKeys.size(); ++i) {
    if (i) out.push_back(',');
    out += kMetadataKeys[i];
  }
  return out;
}

inline std::string metadata_csv_row(const DatasetMetadata& md) {
  std::string out;
  const auto values = md.to_array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    out += csv::format_number(values[i]);
  }
  return out;
}

/// Per-dimension z-scoring fitted on a set of metadata rows. Dimensions with
/// zero spread map to 0.
class Scaler {
 public:
  Scaler() = default;

  static Scaler fit(std::span<const std::vector<double>> rows) {
    if (rows.empty()) throw Error(ErrorCode::EmptyTrainingSet, "scaler needs at least one row");
    const std::size_t dims = rows.front().size();
    Scaler s;
    s.means_.assign(dims, 0.0);
    s.std_devs_.assign(dims, 0.0);
    for (const auto& r : rows) {
      if (r.size() != dims) throw Error(ErrorCode::DimensionMismatch, "ragged scaler input");
      for (std::size_t d = 0; d < dims; ++d) s.means_[d] += r[d];
    }
    const auto n = static_cast<double>(rows.size());
    for (auto& m : s.means_) m /= n;
    for (const auto& r : rows) {
      for (std::size_t d = 0; d < dims; ++d) {
        const double dev = r[d] - s.means_[d];
        s.std_devs_[d] += dev * dev;
      }
    }
    for (auto& v : s.std_devs_) v = std::sqrt(v / n);
    return s;
  }

  /// Non-finite results (undefined inputs) are imputed as 0, the training mean.
  std::vector<double> standardize(std::span<const double> row) const {
    if (row.size() != means_.size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "expected " + std::to_string(means_.size()) + " dims, got " + std::to_string(row.size()));
    }
    std::vector<double> out(row.size(), 0.0);
    for (std::size_t d = 0; d < row.size(); ++d) {
      if (std_devs_[d] > 0.0) {
        const double z = (row[d] - means_[d]) / std_devs_[d];
        out[d] = std::isfinite(z) ? z : 0.0;
      }
    }
    return out;
  }

  std::size_t dims() const { return means_.size(); }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& std_devs() const { return std_devs_; }

 private:
  std::vector<double> means_;
  std::vector<double> std_devs_;
};

}  // namespace prehoc
