#pragma once

// Assembles a portfolio from raw per-dataset files and per-config results.
//
// Input directory layout:
//   results.csv               dataset,fold,framework,metric_error (one row per
//                             config evaluation; extra columns are ignored)
//   datasets/<dataset>.csv    the raw table
//   targets.csv               optional dataset,target overrides; otherwise the
//                             last column is the target
//   descriptions/<dataset>.txt  optional description text
//   embeddings.tsv            optional precomputed description embeddings

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "prehoc/meta_features.hpp"
#include "prehoc/portfolio.hpp"
#include "prehoc/tabular.hpp"
#include "prehoc/text_features.hpp"

namespace prehoc {

namespace detail {

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileUnreadable, path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::size_t column_index(const csv::Record& header, std::string_view name, const std::string& file) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (csv::trim(header[i]) == name) return i;
  }
  throw Error(ErrorCode::SchemaViolation, file + " has no column '" + std::string(name) + "'");
}

}  // namespace detail

/// Best (lowest) error per model type for each (dataset, fold), keyed by
/// dataset id. Config names are mapped with map_config_to_label.
inline std::map<std::string, std::map<int, std::map<ModelLabel, double>>> read_results(std::string_view text,
                                                                                         const std::string& name) {
  auto records = csv::parse_records(text);
  if (records.empty()) throw Error(ErrorCode::HeaderMissing, name);
  const auto& header = records.front();
  const auto c_ds = detail::column_index(header, "dataset", name);
  const auto c_fold = detail::column_index(header, "fold", name);
  const auto c_cfg = detail::column_index(header, "framework", name);
  const auto c_err = detail::column_index(header, "metric_error", name);

  std::map<std::string, std::map<int, std::map<ModelLabel, double>>> out;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& row = records[r];
    if (row.size() != header.size()) throw Error(ErrorCode::RaggedRow, name + " row " + std::to_string(r - 1), r - 1);
    const auto fold = csv::parse_number(row[c_fold]);
    const auto err = csv::parse_number(row[c_err]);
    if (!fold || !err) throw Error(ErrorCode::ParseError, name + " row " + std::to_string(r - 1), r - 1);
    const auto label = map_config_to_label(csv::trim(row[c_cfg]));
    auto& slot = out[std::string(csv::trim(row[c_ds]))][static_cast<int>(*fold)];
    auto it = slot.find(label);
    if (it == slot.end() || *err < it->second) slot[label] = *err;
  }
  return out;
}

inline Portfolio build_portfolio(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const auto results_path = dir / "results.csv";
  const auto results = read_results(detail::read_text_file(results_path), results_path.string());

  std::map<std::string, std::string> targets;
  if (fs::exists(dir / "targets.csv")) {
    const auto recs = csv::parse_records(detail::read_text_file(dir / "targets.csv"));
    for (std::size_t r = 1; r < recs.size(); ++r) {
      if (recs[r].size() >= 2) targets[std::string(csv::trim(recs[r][0]))] = std::string(csv::trim(recs[r][1]));
    }
  }
  std::optional<EmbeddingTable> embeddings;
  if (fs::exists(dir / "embeddings.tsv")) embeddings = load_embeddings(dir / "embeddings.tsv");

  Portfolio p;
  p.provenance = "built from " + dir.string();
  for (const auto& [id, folds] : results) {
    PortfolioRecord rec;
    rec.dataset_id = id;
    std::optional<std::string> target;
    if (auto it = targets.find(id); it != targets.end()) target = it->second;
    auto ds = load_dataset(dir / "datasets" / (id + ".csv"), target);
    ds.id = id;
    rec.metadata = compute_metadata(ds);
    if (const auto desc = dir / "descriptions" / (id + ".txt"); fs::exists(desc)) {
      rec.description = std::string(csv::trim(detail::read_text_file(desc)));
    }
    if (embeddings) {
      if (const auto* v = embeddings->find(id)) rec.embedding = *v;
    }
    for (const auto& [fold, errors] : folds) rec.folds.push_back(rank_fold(fold, errors));
    rec.ground_truth = derive_ground_truth(rec.folds);
    p.records.push_back(std::move(rec));
  }
  return p;
}

}  // namespace prehoc
