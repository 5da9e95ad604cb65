#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "prehoc/error.hpp"
#include "prehoc/meta_features.hpp"
#include "prehoc/taxonomy.hpp"

namespace prehoc {

/// One evaluation fold: rank per model type (1 = best) and its metric error.
struct FoldResult {
  int fold = 1;
  std::map<ModelLabel, int> ranks;
  std::map<ModelLabel, double> errors;

  bool operator==(const FoldResult&) const = default;
};

struct PortfolioRecord {
  std::string dataset_id;
  DatasetMetadata metadata;
  std::string description;
  std::optional<std::vector<double>> embedding;
  std::vector<FoldResult> folds;
  ModelLabel ground_truth = ModelLabel::CatBoost;

  bool operator==(const PortfolioRecord&) const = default;
};

struct Portfolio {
  std::vector<PortfolioRecord> records;
  std::string provenance;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  const PortfolioRecord* find(std::string_view id) const {
    auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.dataset_id == id; });
    return it == records.end() ? nullptr : &*it;
  }

  std::vector<ModelLabel> truths() const {
    std::vector<ModelLabel> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.ground_truth);
    return out;
  }
};

/// Best label across folds: lowest mean rank, then lowest mean metric error,
/// then enumeration order. Mean ranks are compared exactly as fractions.
inline ModelLabel derive_ground_truth(std::span<const FoldResult> folds) {
  struct Acc {
    long long rank_sum = 0;
    long long rank_n = 0;
    double error_sum = 0.0;
    long long error_n = 0;
  };
  std::array<Acc, kNumLabels> acc{};
  for (const auto& f : folds) {
    for (const auto& [label, rank] : f.ranks) {
      acc[index_of(label)].rank_sum += rank;
      acc[index_of(label)].rank_n += 1;
    }
    for (const auto& [label, err] : f.errors) {
      acc[index_of(label)].error_sum += err;
      acc[index_of(label)].error_n += 1;
    }
  }
  auto mean_error = [](const Acc& a) {
    return a.error_n ? a.error_sum / static_cast<double>(a.error_n) : std::numeric_limits<double>::infinity();
  };

  std::optional<ModelLabel> best;
  for (auto label : kAllLabels) {
    const auto& a = acc[index_of(label)];
    if (a.rank_n == 0) continue;
    if (!best) {
      best = label;
      continue;
    }
    const auto& b = acc[index_of(*best)];
    // a.sum/a.n < b.sum/b.n  <=>  a.sum*b.n < b.sum*a.n
    const long long lhs = a.rank_sum * b.rank_n;
    const long long rhs = b.rank_sum * a.rank_n;
    if (lhs < rhs || (lhs == rhs && mean_error(a) < mean_error(b))) best = label;
  }
  if (!best) throw Error(ErrorCode::NoRanks, "no ranked labels in any fold");
  return *best;
}

/// Checks that each fold ranks its labels 1..k without gaps or repeats and
/// that errors are finite and non-negative. Returns a description of the
/// first problem, or nothing.
inline std::optional<std::string> validate_folds(std::span<const FoldResult> folds) {
  if (folds.empty()) return "no folds";
  for (const auto& f : folds) {
    if (f.ranks.empty()) return "fold " + std::to_string(f.fold) + " has no ranks";
    std::vector<int> seen;
    for (const auto& [_, r] : f.ranks) seen.push_back(r);
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (seen[i] != static_cast<int>(i + 1)) {
        return "fold " + std::to_string(f.fold) + " ranks are not a permutation of 1.." + std::to_string(seen.size());
      }
    }
    for (const auto& [label, e] : f.errors) {
      if (!std::isfinite(e) || e < 0.0) return "fold " + std::to_string(f.fold) + " has invalid error";
    }
  }
  return std::nullopt;
}

/// Ranks labels within one fold by ascending error (ties by enumeration
/// order), producing a complete 1..k ranking.
inline FoldResult rank_fold(int fold, const std::map<ModelLabel, double>& errors) {
  std::vector<std::pair<double, ModelLabel>> order;
  for (const auto& [label, e] : errors) order.emplace_back(e, label);
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  FoldResult out;
  out.fold = fold;
  out.errors = errors;
  for (std::size_t i = 0; i < order.size(); ++i) out.ranks[order[i].second] = static_cast<int>(i + 1);
  return out;
}

/// Per-label stratified split. Each label contributes round(test_fraction *
/// count) records to test, except singleton labels which stay in train.
/// Within a label, members are ordered by dataset_id and then shuffled with a
/// generator seeded from `seed`, so the result does not depend on input order.
inline std::pair<Portfolio, Portfolio> stratified_split(const Portfolio& portfolio, double test_fraction = 0.2,
                                                        std::uint64_t seed = 0) {
  std::array<std::vector<const PortfolioRecord*>, kNumLabels> groups;
  for (const auto& r : portfolio.records) groups[index_of(r.ground_truth)].push_back(&r);

  std::mt19937_64 rng(seed);
  Portfolio train, test;
  train.provenance = portfolio.provenance + " [train]";
  test.provenance = portfolio.provenance + " [test]";
  for (auto& group : groups) {
    if (group.empty()) continue;
    std::sort(group.begin(), group.end(), [](auto* a, auto* b) { return a->dataset_id < b->dataset_id; });
    std::shuffle(group.begin(), group.end(), rng);
    const std::size_t n_test =
        group.size() == 1 ? 0 : static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(group.size())));
    for (std::size_t i = 0; i < group.size(); ++i) {
      (i < n_test ? test : train).records.push_back(*group[i]);
    }
  }
  auto by_id = [](const auto& a, const auto& b) { return a.dataset_id < b.dataset_id; };
  std::sort(train.records.begin(), train.records.end(), by_id);
  std::sort(test.records.begin(), test.records.end(), by_id);
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// JSONL persistence

inline nlohmann::ordered_json to_json(const PortfolioRecord& r) {
  nlohmann::ordered_json j;
  j["dataset_id"] = r.dataset_id;
  j["metadata"] = to_json(r.metadata);
  j["description"] = r.description;
  j["embedding"] = r.embedding ? nlohmann::ordered_json(*r.embedding) : nlohmann::ordered_json(nullptr);
  auto folds = nlohmann::ordered_json::array();
  for (const auto& f : r.folds) {
    nlohmann::ordered_json jf;
    jf["fold"] = f.fold;
    jf["ranks"] = nlohmann::ordered_json::object();
    for (const auto& [label, rank] : f.ranks) jf["ranks"][std::string(to_string(label))] = rank;
    jf["errors"] = nlohmann::ordered_json::object();
    for (const auto& [label, e] : f.errors) jf["errors"][std::string(to_string(label))] = e;
    folds.push_back(std::move(jf));
  }
  j["folds"] = std::move(folds);
  j["ground_truth"] = std::string(to_string(r.ground_truth));
  return j;
}

/// Parses one record. Throws SchemaViolation (without a line number; the
/// caller attaches it).
inline PortfolioRecord record_from_json(const nlohmann::json& j) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::SchemaViolation, what); };
  if (!j.is_object()) fail("record is not an object");
  auto require = [&](const char* key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (it == j.end()) fail(std::string("missing field '") + key + "'");
    return *it;
  };
  auto label_of = [&](const std::string& name) {
    auto l = parse_label(name);
    if (!l) fail("unknown model label '" + name + "'");
    return *l;
  };

  PortfolioRecord r;
  const auto& id = require("dataset_id");
  if (!id.is_string() || id.get<std::string>().empty()) fail("dataset_id must be a non-empty string");
  r.dataset_id = id.get<std::string>();
  r.metadata = metadata_from_json(require("metadata"));

  if (auto it = j.find("description"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) fail("description must be a string");
    r.description = it->get<std::string>();
  }
  if (auto it = j.find("embedding"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) fail("embedding must be an array or null");
    std::vector<double> v;
    for (const auto& x : *it) {
      if (!x.is_number()) fail("embedding entries must be numbers");
      v.push_back(x.get<double>());
    }
    r.embedding = std::move(v);
  }

  const auto& folds = require("folds");
  if (!folds.is_array() || folds.empty()) fail("folds must be a non-empty array");
  for (const auto& jf : folds) {
    if (!jf.is_object()) fail("fold entry is not an object");
    FoldResult f;
    auto fit = jf.find("fold");
    if (fit == jf.end() || !fit->is_number_integer()) fail("fold.fold must be an integer");
    f.fold = fit->get<int>();
    auto rit = jf.find("ranks");
    if (rit == jf.end() || !rit->is_object()) fail("fold.ranks must be an object");
    for (const auto& [name, rank] : rit->items()) {
      if (!rank.is_number_integer()) fail("rank for " + name + " must be an integer");
      f.ranks[label_of(name)] = rank.get<int>();
    }
    if (auto eit = jf.find("errors"); eit != jf.end()) {
      if (!eit->is_object()) fail("fold.errors must be an object");
      for (const auto& [name, e] : eit->items()) {
        if (!e.is_number()) fail("error for " + name + " must be a number");
        f.errors[label_of(name)] = e.get<double>();
      }
    }
    r.folds.push_back(std::move(f));
  }
  if (auto problem = validate_folds(r.folds)) fail(*problem);

  const auto& gt = require("ground_truth");
  if (!gt.is_string()) fail("ground_truth must be a string");
  r.ground_truth = label_of(gt.get<std::string>());
  return r;
}

/// Reads a JSONL portfolio. Blank lines are skipped; line numbers in errors
/// are 1-based. Stored ground truths are re-derived and must agree.
inline Portfolio read_portfolio(std::istream& in, std::string provenance = {}) {
  Portfolio p;
  p.provenance = std::move(provenance);
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    PortfolioRecord r;
    try {
      r = record_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaViolation, "line " + std::to_string(line_no) + ": " + e.what(), line_no);
    } catch (const Error& e) {
      throw Error(ErrorCode::SchemaViolation, "line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    if (!ids.insert(r.dataset_id).second) {
      throw Error(ErrorCode::SchemaViolation, "line " + std::to_string(line_no) + ": duplicate dataset_id " + r.dataset_id,
                  line_no);
    }
    if (derive_ground_truth(r.folds) != r.ground_truth) {
      throw Error(ErrorCode::GroundTruthMismatch,
                  r.dataset_id + " stores " + std::string(to_string(r.ground_truth)) + " but ranks give " +
                      std::string(to_string(derive_ground_truth(r.folds))),
                  line_no);
    }
    p.records.push_back(std::move(r));
  }
  return p;
}

inline Portfolio load_portfolio(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileUnreadable, path.string());
  return read_portfolio(in, path.string());
}

inline void write_portfolio(const Portfolio& p, std::ostream& out) {
  for (const auto& r : p.records) out << to_json(r).dump() << '\n';
}

/// Replaces the file as a whole (write to a sibling, then rename).
inline void save_portfolio(const Portfolio& p, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::FileUnreadable, "cannot write " + tmp.string());
    write_portfolio(p, out);
    if (!out) throw Error(ErrorCode::FileUnreadable, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::array<std::size_t, kNumLabels> label_counts(std::span<const ModelLabel> labels) {
  std::array<std::size_t, kNumLabels> counts{};
  for (auto l : labels) ++counts[index_of(l)];
  return counts;
}

}  // namespace prehoc
