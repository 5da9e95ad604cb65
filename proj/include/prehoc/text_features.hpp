#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "prehoc/error.hpp"
#include "prehoc/tabular.hpp"

namespace prehoc {

/// Lowercased alphanumeric runs of length >= 2.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2) tokens.push_back(cur);
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

/// Sparse vector with strictly increasing indices.
struct SparseVector {
  std::vector<std::pair<std::size_t, double>> entries;

  bool empty() const { return entries.empty(); }

  double norm() const {
    double s = 0.0;
    for (const auto& [_, w] : entries) s += w * w;
    return std::sqrt(s);
  }

  bool operator==(const SparseVector&) const = default;
};

inline double dot(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  auto i = a.entries.begin();
  auto j = b.entries.begin();
  while (i != a.entries.end() && j != b.entries.end()) {
    if (i->first < j->first) ++i;
    else if (j->first < i->first) ++j;
    else {
      s += i->second * j->second;
      ++i;
      ++j;
    }
  }
  return s;
}

inline double cosine_similarity(const SparseVector& a, const SparseVector& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "cosine of vectors with " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " dims");
  }
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

inline bool is_zero(const SparseVector& v) { return v.norm() == 0.0; }

inline bool is_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

/// Smoothed TF-IDF: idf(t) = ln((1 + N) / (1 + df(t))) + 1, raw term counts,
/// L2-normalized output.
class TfIdfModel {
 public:
  static TfIdfModel fit(std::span<const std::string> corpus) {
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "TF-IDF needs at least one document");
    std::map<std::string, std::size_t> df;
    for (const auto& doc : corpus) {
      auto toks = tokenize(doc);
      std::sort(toks.begin(), toks.end());
      toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
      for (auto& t : toks) ++df[t];
    }
    TfIdfModel m;
    m.doc_count_ = corpus.size();
    const double n = static_cast<double>(corpus.size());
    for (const auto& [term, count] : df) {
      m.vocabulary_.emplace(term, m.idf_.size());
      m.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
    return m;
  }

  /// Out-of-vocabulary tokens are ignored; an all-OOV text gives an empty vector.
  SparseVector vectorize(std::string_view text) const {
    std::map<std::size_t, double> tf;
    for (const auto& t : tokenize(text)) {
      if (auto it = vocabulary_.find(t); it != vocabulary_.end()) tf[it->second] += 1.0;
    }
    SparseVector v;
    double sq = 0.0;
    for (const auto& [idx, count] : tf) {
      const double w = count * idf_[idx];
      v.entries.emplace_back(idx, w);
      sq += w * w;
    }
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (auto& e : v.entries) e.second *= inv;
    }
    return v;
  }

  std::size_t doc_count() const { return doc_count_; }
  std::size_t vocabulary_size() const { return idf_.size(); }
  const std::vector<double>& idf() const { return idf_; }

  std::optional<std::size_t> index_of(const std::string& term) const {
    auto it = vocabulary_.find(term);
    if (it == vocabulary_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<double> idf_of(const std::string& term) const {
    auto idx = index_of(term);
    if (!idx) return std::nullopt;
    return idf_[*idx];
  }

 private:
  std::unordered_map<std::string, std::size_t> vocabulary_;
  std::vector<double> idf_;
  std::size_t doc_count_ = 0;
};

/// Precomputed dense description embeddings keyed by dataset id.
struct EmbeddingTable {
  std::map<std::string, std::vector<double>> vectors;
  std::size_t dim = 0;

  const std::vector<double>* find(const std::string& id) const {
    auto it = vectors.find(id);
    return it == vectors.end() ? nullptr : &it->second;
  }
};

/// Lines of `dataset_id<TAB>v1,v2,...,vd`; blank lines are skipped and line
/// numbers in errors are 1-based.
inline EmbeddingTable read_embeddings(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (csv::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected id<TAB>values", line_no);
    }
    std::vector<double> v;
    std::string_view rest(line);
    rest.remove_prefix(tab + 1);
    while (true) {
      const auto comma = rest.find(',');
      auto num = csv::parse_number(rest.substr(0, comma));
      if (!num) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number", line_no);
      v.push_back(*num);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (table.vectors.empty()) {
      table.dim = v.size();
    } else if (v.size() != table.dim) {
      throw Error(ErrorCode::DimensionInconsistent,
                  "line " + std::to_string(line_no) + ": " + std::to_string(v.size()) + " values, expected " +
                      std::to_string(table.dim),
                  line_no);
    }
    table.vectors[line.substr(0, tab)] = std::move(v);
  }
  if (table.vectors.empty()) throw Error(ErrorCode::EmptyCorpus, "embedding file has no vectors");
  return table;
}

inline EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileUnreadable, path.string());
  return read_embeddings(in);
}

}  // namespace prehoc
