#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "prehoc/error.hpp"

namespace prehoc {

// Enumeration order is significant: every tie-break in the library falls
// back to it.
enum class ModelLabel : std::uint8_t {
  CatBoost,
  XGBoost,
  LightGBM,
  RandomForest,
  ExtraTrees,
  NeuralNetFastAI,
  NeuralNetTorch,
  FTTransformer,
  TabPFN,
  LinearModel,
  KNeighbors,
};

enum class ModelFamily : std::uint8_t {
  BoostingMethods,
  TreeEnsembles,
  NeuralNetworks,
  Transformers,
  LinearModels,
  InstanceBasedModels,
};

inline constexpr std::size_t kNumLabels = 11;
inline constexpr std::size_t kNumFamilies = 6;

inline constexpr std::array<ModelLabel, kNumLabels> kAllLabels = {
    ModelLabel::CatBoost,        ModelLabel::XGBoost,       ModelLabel::LightGBM,
    ModelLabel::RandomForest,    ModelLabel::ExtraTrees,    ModelLabel::NeuralNetFastAI,
    ModelLabel::NeuralNetTorch,  ModelLabel::FTTransformer, ModelLabel::TabPFN,
    ModelLabel::LinearModel,     ModelLabel::KNeighbors,
};

inline constexpr std::array<ModelFamily, kNumFamilies> kAllFamilies = {
    ModelFamily::BoostingMethods, ModelFamily::TreeEnsembles, ModelFamily::NeuralNetworks,
    ModelFamily::Transformers,    ModelFamily::LinearModels,  ModelFamily::InstanceBasedModels,
};

inline constexpr std::array<std::string_view, kNumLabels> kLabelNames = {
    "CatBoost",       "XGBoost",       "LightGBM", "RandomForest", "ExtraTrees", "NeuralNetFastAI",
    "NeuralNetTorch", "FTTransformer", "TabPFN",   "LinearModel",  "KNeighbors",
};

inline constexpr std::size_t index_of(ModelLabel label) { return static_cast<std::size_t>(label); }
inline constexpr std::size_t index_of(ModelFamily family) { return static_cast<std::size_t>(family); }

inline constexpr std::string_view to_string(ModelLabel label) { return kLabelNames[index_of(label)]; }

inline constexpr std::string_view to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::BoostingMethods: return "BoostingMethods";
    case ModelFamily::TreeEnsembles: return "TreeEnsembles";
    case ModelFamily::NeuralNetworks: return "NeuralNetworks";
    case ModelFamily::Transformers: return "Transformers";
    case ModelFamily::LinearModels: return "LinearModels";
    case ModelFamily::InstanceBasedModels: return "InstanceBasedModels";
  }
  return "";
}

/// Human-readable family name, as shown to the agent.
inline constexpr std::string_view display_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::BoostingMethods: return "Boosting Methods";
    case ModelFamily::TreeEnsembles: return "Tree Ensembles";
    case ModelFamily::NeuralNetworks: return "Neural Networks";
    case ModelFamily::Transformers: return "Transformers";
    case ModelFamily::LinearModels: return "Linear Models";
    case ModelFamily::InstanceBasedModels: return "Instance-Based Models";
  }
  return "";
}

inline constexpr ModelFamily family_of(ModelLabel label) {
  switch (label) {
    case ModelLabel::CatBoost:
    case ModelLabel::XGBoost:
    case ModelLabel::LightGBM: return ModelFamily::BoostingMethods;
    case ModelLabel::RandomForest:
    case ModelLabel::ExtraTrees: return ModelFamily::TreeEnsembles;
    case ModelLabel::NeuralNetFastAI:
    case ModelLabel::NeuralNetTorch: return ModelFamily::NeuralNetworks;
    case ModelLabel::FTTransformer:
    case ModelLabel::TabPFN: return ModelFamily::Transformers;
    case ModelLabel::LinearModel: return ModelFamily::LinearModels;
    case ModelLabel::KNeighbors: return ModelFamily::InstanceBasedModels;
  }
  return ModelFamily::BoostingMethods;
}

namespace detail {

inline std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && lower(a) == lower(b);
}

}  // namespace detail

/// Exact canonical spelling.
inline std::optional<ModelLabel> parse_label(std::string_view name) {
  for (auto label : kAllLabels) {
    if (to_string(label) == name) return label;
  }
  return std::nullopt;
}

inline std::optional<ModelLabel> parse_label_icase(std::string_view name) {
  for (auto label : kAllLabels) {
    if (detail::iequals(to_string(label), name)) return label;
  }
  return std::nullopt;
}

inline std::optional<ModelFamily> parse_family(std::string_view name) {
  for (auto family : kAllFamilies) {
    if (to_string(family) == name) return family;
  }
  return std::nullopt;
}

/// Maps a portfolio configuration name such as "CatBoost_r177" or
/// "NeuralNetTorch_c1_BAG_L1" onto its model type. Separators ('_', '-',
/// ' ', '.') are stripped before the longest-prefix match; matching is
/// case-insensitive.
inline ModelLabel map_config_to_label(std::string_view config_name) {
  if (config_name.empty()) throw Error(ErrorCode::UnknownConfig, "empty config name");
  std::string squashed;
  for (char c : config_name) {
    if (c == '_' || c == '-' || c == ' ' || c == '.') continue;
    squashed.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  std::optional<ModelLabel> best;
  std::size_t best_len = 0;
  for (auto label : kAllLabels) {
    auto name = detail::lower(to_string(label));
    if (squashed.starts_with(name) && name.size() > best_len) {
      best = label;
      best_len = name.size();
    }
  }
  if (!best) throw Error(ErrorCode::UnknownConfig, std::string(config_name));
  return *best;
}

}  // namespace prehoc
