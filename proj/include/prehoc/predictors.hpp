#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "prehoc/error.hpp"
#include "prehoc/taxonomy.hpp"
#include "prehoc/text_features.hpp"

namespace prehoc {

struct Prediction {
  std::string dataset_id;
  ModelLabel label = ModelLabel::CatBoost;
  ModelFamily family = ModelFamily::BoostingMethods;
  std::string method;
  std::optional<std::string> rationale;
  std::optional<std::vector<std::string>> neighbor_ids;

  Prediction() = default;
  Prediction(std::string id, ModelLabel l, std::string m)
      : dataset_id(std::move(id)), label(l), family(family_of(l)), method(std::move(m)) {}

  bool operator==(const Prediction&) const = default;
};

/// A training row for the metadata predictors (already standardized).
struct LabeledPoint {
  std::string dataset_id;
  std::vector<double> features;
  ModelLabel label = ModelLabel::CatBoost;
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline void check_training_set(std::span<const LabeledPoint> train, std::size_t query_dims) {
  if (train.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no training rows");
  for (const auto& p : train) {
    if (p.features.size() != query_dims) {
      throw Error(ErrorCode::DimensionMismatch, "training row " + p.dataset_id + " has " +
                                                    std::to_string(p.features.size()) + " dims, query has " +
                                                    std::to_string(query_dims));
    }
  }
}

struct Neighbor {
  double distance2;
  const LabeledPoint* point;
};

/// All training rows ordered by (distance, dataset_id).
inline std::vector<Neighbor> rank_neighbors(std::span<const LabeledPoint> train, std::span<const double> query) {
  std::vector<Neighbor> out;
  out.reserve(train.size());
  for (const auto& p : train) out.push_back({squared_distance(p.features, query), &p});
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return std::tie(a.distance2, a.point->dataset_id) < std::tie(b.distance2, b.point->dataset_id);
  });
  return out;
}

}  // namespace detail

/// Label of the nearest training row; equal distances go to the smaller dataset_id.
inline Prediction predict_1nn_euclidean(std::span<const LabeledPoint> train, std::span<const double> query,
                                        std::string query_id = {}) {
  detail::check_training_set(train, query.size());
  const LabeledPoint* best = nullptr;
  double best_d = 0.0;
  for (const auto& p : train) {
    const double d = detail::squared_distance(p.features, query);
    if (!best || d < best_d || (d == best_d && p.dataset_id < best->dataset_id)) {
      best = &p;
      best_d = d;
    }
  }
  Prediction out(std::move(query_id), best->label, "euclid");
  out.neighbor_ids = std::vector<std::string>{best->dataset_id};
  return out;
}

/// Majority vote over the k nearest rows (k capped at the training size).
/// Vote ties go to the label with the smaller mean neighbor distance, then to
/// enumeration order.
inline Prediction predict_knn(std::span<const LabeledPoint> train, std::span<const double> query, std::size_t k = 3,
                              std::string query_id = {}) {
  detail::check_training_set(train, query.size());
  if (k == 0) throw Error(ErrorCode::TooFewSamples, "k must be at least 1");
  const auto ranked = detail::rank_neighbors(train, query);
  const std::size_t kk = std::min(k, ranked.size());

  std::array<std::size_t, kNumLabels> votes{};
  std::array<double, kNumLabels> dist_sum{};
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < kk; ++i) {
    const auto l = index_of(ranked[i].point->label);
    ++votes[l];
    dist_sum[l] += std::sqrt(ranked[i].distance2);
    ids.push_back(ranked[i].point->dataset_id);
  }

  std::optional<std::size_t> best;
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    if (votes[l] == 0) continue;
    if (!best || votes[l] > votes[*best]) {
      best = l;
      continue;
    }
    if (votes[l] == votes[*best]) {
      const double mine = dist_sum[l] / static_cast<double>(votes[l]);
      const double theirs = dist_sum[*best] / static_cast<double>(votes[*best]);
      if (mine < theirs) best = l;
    }
  }
  Prediction out(std::move(query_id), kAllLabels[*best], "knn");
  out.neighbor_ids = std::move(ids);
  return out;
}

/// A description vector with its dataset's label.
template <typename Vector>
struct TextPoint {
  std::string dataset_id;
  Vector vector;
  ModelLabel label = ModelLabel::CatBoost;
};

/// Cosine nearest neighbor; equal similarities go to the smaller dataset_id.
/// A zero query raises ZeroVector so the caller can fall back.
template <typename Vector>
Prediction predict_text_nn(std::span<const TextPoint<Vector>> train, const Vector& query, std::string query_id = {},
                           std::string method = "text") {
  if (train.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no training descriptions");
  if (is_zero(query)) throw Error(ErrorCode::ZeroVector, "query vector is zero");
  const TextPoint<Vector>* best = nullptr;
  double best_sim = 0.0;
  for (const auto& p : train) {
    const double s = cosine_similarity(p.vector, query);
    if (!best || s > best_sim || (s == best_sim && p.dataset_id < best->dataset_id)) {
      best = &p;
      best_sim = s;
    }
  }
  Prediction out(std::move(query_id), best->label, std::move(method));
  out.neighbor_ids = std::vector<std::string>{best->dataset_id};
  return out;
}

}  // namespace prehoc
