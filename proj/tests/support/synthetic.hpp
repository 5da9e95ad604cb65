#pragma once

// Synthetic portfolios and mock chat endpoints shared by the test suites.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "prehoc/agent.hpp"
#include "prehoc/portfolio.hpp"

namespace prehoc::testing {

/// Three folds in which `best` ranks first and the remaining labels follow
/// in a shuffled order; errors increase with rank.
inline std::vector<FoldResult> folds_with_winner(ModelLabel best, std::mt19937_64& rng) {
  std::vector<FoldResult> folds;
  for (int f = 1; f <= 3; ++f) {
    std::vector<ModelLabel> rest;
    for (auto l : kAllLabels) {
      if (l != best) rest.push_back(l);
    }
    std::shuffle(rest.begin(), rest.end(), rng);
    FoldResult fr;
    fr.fold = f;
    fr.ranks[best] = 1;
    fr.errors[best] = 0.1;
    for (std::size_t i = 0; i < rest.size(); ++i) {
      fr.ranks[rest[i]] = static_cast<int>(i + 2);
      fr.errors[rest[i]] = 0.1 + 0.01 * static_cast<double>(i + 1);
    }
    folds.push_back(std::move(fr));
  }
  return folds;
}

inline DatasetMetadata metadata_from(const std::array<double, 11>& v) {
  DatasetMetadata md;
  auto count = [](double x) { return static_cast<std::uint64_t>(std::max(0.0, std::round(x))); };
  md.n_samples = count(v[0]);
  md.n_features = count(v[1]);
  md.n_numerical = count(v[2]);
  md.n_categorical = count(v[3]);
  md.class_imbalance = v[4];
  md.n_outliers = count(v[5]);
  md.avg_skewness = v[6];
  md.avg_kurtosis = v[7];
  md.avg_variance = v[8];
  md.n_missing = count(v[9]);
  md.target_entropy = v[10];
  return md;
}

/// Label-specific vocabulary used in synthetic descriptions.
inline std::string topic_word(ModelLabel l) {
  static const std::array<const char*, kNumLabels> words = {
      "astronomy", "botany", "chemistry", "dentistry", "economics", "forestry",
      "geology",   "hydrology", "immunology", "journalism", "kinesiology"};
  return words[index_of(l)];
}

/// Portfolio with the given number of records per label (enumeration order).
/// Metadata is drawn around a label-specific center: every dimension of
/// label i has center 1000 + 20 * sigma * i, well beyond 5 sigma apart.
/// Descriptions mention the label's topic word plus shared filler.
inline Portfolio make_portfolio(const std::array<std::size_t, kNumLabels>& per_label, std::uint64_t seed = 7,
                                double sigma = 1.0, bool with_embeddings = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Portfolio p;
  p.provenance = "synthetic";
  std::size_t serial = 0;
  for (auto l : kAllLabels) {
    for (std::size_t k = 0; k < per_label[index_of(l)]; ++k) {
      PortfolioRecord r;
      char id[32];
      std::snprintf(id, sizeof(id), "ds_%03zu", serial++);
      r.dataset_id = id;
      std::array<double, 11> v{};
      const double center = 1000.0 + 20.0 * sigma * static_cast<double>(index_of(l));
      for (auto& x : v) x = center + noise(rng);
      r.metadata = metadata_from(v);
      r.description = "tabular dataset collected for " + topic_word(l) + " research with numeric features";
      if (with_embeddings) {
        std::vector<double> e(8, 0.0);
        e[index_of(l) % 8] = 1.0;
        e[(index_of(l) + 3) % 8] += 0.5 * static_cast<double>(index_of(l) / 8 + 1);
        for (auto& x : e) x += 0.01 * noise(rng) / sigma;
        r.embedding = std::move(e);
      }
      r.folds = folds_with_winner(l, rng);
      r.ground_truth = derive_ground_truth(r.folds);
      p.records.push_back(std::move(r));
    }
  }
  return p;
}

/// 175 records; CatBoost holds the majority with 42 and one label is a singleton.
inline constexpr std::array<std::size_t, kNumLabels> kPortfolio175 = {42, 30, 25, 20, 15, 12, 10, 9, 7, 4, 1};

inline std::string chat_body(const std::string& content) {
  nlohmann::json j;
  j["choices"] = nlohmann::json::array({{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}});
  return j.dump();
}

inline agent::ChatTransport fixed_reply(std::string text, std::atomic<int>* calls = nullptr) {
  return [text = std::move(text), calls](const agent::HttpRequest&) {
    if (calls) ++*calls;
    return agent::HttpResponse{200, chat_body(text), {}};
  };
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Picks a label uniformly, keyed on a hash of the request body so that the
/// answer is reproducible and independent of call order.
inline agent::ChatTransport uniform_random_reply(std::uint64_t seed) {
  return [seed](const agent::HttpRequest& req) {
    std::mt19937_64 rng(fnv1a(req.body, seed));
    std::uniform_int_distribution<std::size_t> pick(0, kNumLabels - 1);
    const auto label = kAllLabels[pick(rng)];
    return agent::HttpResponse{200, chat_body("Looks suitable.\nMODEL: " + std::string(to_string(label))), {}};
  };
}

inline agent::AgentConfig mock_config(agent::PromptMode mode = agent::PromptMode::ZeroShot, bool rag = false) {
  agent::AgentConfig c;
  c.endpoint_url = "http://mock.invalid/v1/chat/completions";
  c.model_name = "mock";
  c.mode = mode;
  c.rag_enabled = rag;
  c.backoff_base = std::chrono::milliseconds(0);
  return c;
}

}  // namespace prehoc::testing
