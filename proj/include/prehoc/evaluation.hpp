#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "prehoc/error.hpp"
#include "prehoc/forest.hpp"
#include "prehoc/meta_features.hpp"
#include "prehoc/portfolio.hpp"
#include "prehoc/predictors.hpp"
#include "prehoc/taxonomy.hpp"
#include "prehoc/text_features.hpp"

namespace prehoc {

struct LabelPair {
  ModelLabel predicted;
  ModelLabel truth;
};

inline double family_accuracy(std::span<const LabelPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyPairs, "family accuracy of no pairs");
  std::size_t hits = 0;
  for (const auto& p : pairs) hits += family_of(p.predicted) == family_of(p.truth);
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

inline double model_accuracy(std::span<const LabelPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyPairs, "model accuracy of no pairs");
  std::size_t hits = 0;
  for (const auto& p : pairs) hits += p.predicted == p.truth;
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

enum class BaselineKind { RandomUniform, MostFrequent };

struct BaselineResult {
  BaselineKind kind = BaselineKind::RandomUniform;
  double family_accuracy = 0.0;
  double model_accuracy = 0.0;
  std::size_t trials = 0;  // RandomUniform only
};

/// Averages both accuracies over `trials` rounds of one uniform draw per truth.
inline BaselineResult random_baseline(std::span<const ModelLabel> truths, std::size_t trials = 1000,
                                      std::uint64_t seed = 0) {
  if (truths.empty()) throw Error(ErrorCode::EmptyPairs, "random baseline needs truths");
  if (trials == 0) throw Error(ErrorCode::EmptyPairs, "random baseline needs at least one trial");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, kNumLabels - 1);
  std::vector<LabelPair> pairs(truths.size());
  double fam = 0.0, mod = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < truths.size(); ++i) pairs[i] = {kAllLabels[pick(rng)], truths[i]};
    fam += family_accuracy(pairs);
    mod += model_accuracy(pairs);
  }
  return {BaselineKind::RandomUniform, fam / static_cast<double>(trials), mod / static_cast<double>(trials), trials};
}

/// Most common label, ties going to enumeration order.
inline ModelLabel most_frequent_label(std::span<const ModelLabel> labels) {
  if (labels.empty()) throw Error(ErrorCode::EmptyPairs, "no labels");
  const auto counts = label_counts(labels);
  return kAllLabels[static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin())];
}

/// Predicts the portfolio's most frequent label for every test truth.
inline BaselineResult frequency_baseline(std::span<const ModelLabel> portfolio_truths,
                                         std::span<const ModelLabel> test_truths) {
  if (portfolio_truths.empty() || test_truths.empty()) throw Error(ErrorCode::EmptyPairs, "frequency baseline");
  const auto guess = most_frequent_label(portfolio_truths);
  std::vector<LabelPair> pairs;
  for (auto t : test_truths) pairs.push_back({guess, t});
  return {BaselineKind::MostFrequent, family_accuracy(pairs), model_accuracy(pairs), 0};
}

struct DatasetOutcome {
  std::string dataset_id;
  std::optional<ModelLabel> predicted;  // nullopt: the method abstained
  ModelLabel truth = ModelLabel::CatBoost;
  bool family_match = false;
  bool model_match = false;
};

struct EvalReport {
  std::string method;
  std::map<std::string, std::string> config;
  double family_accuracy = 0.0;
  double model_accuracy = 0.0;
  std::size_t n_test = 0;
  std::vector<DatasetOutcome> per_dataset;
  std::uint64_t seed = 0;
};

/// Abstentions count as misses on both metrics.
inline EvalReport make_report(std::string method, std::vector<DatasetOutcome> outcomes, std::uint64_t seed,
                              std::map<std::string, std::string> config = {}) {
  std::sort(outcomes.begin(), outcomes.end(),
            [](const auto& a, const auto& b) { return a.dataset_id < b.dataset_id; });
  EvalReport r;
  r.method = std::move(method);
  r.config = std::move(config);
  r.seed = seed;
  r.n_test = outcomes.size();
  std::size_t fam = 0, mod = 0;
  for (auto& o : outcomes) {
    o.model_match = o.predicted && *o.predicted == o.truth;
    o.family_match = o.predicted && family_of(*o.predicted) == family_of(o.truth);
    fam += o.family_match;
    mod += o.model_match;
  }
  if (!outcomes.empty()) {
    r.family_accuracy = static_cast<double>(fam) / static_cast<double>(outcomes.size());
    r.model_accuracy = static_cast<double>(mod) / static_cast<double>(outcomes.size());
  }
  r.per_dataset = std::move(outcomes);
  return r;
}

/// Predictor over a single query record; may throw to abstain.
using RecordPredictor = std::function<ModelLabel(const PortfolioRecord&)>;

/// Runs `predict` over every test record with at most `max_in_flight`
/// concurrent calls. Exceptions become abstentions.
inline std::vector<DatasetOutcome> evaluate_records(std::span<const PortfolioRecord> test, const RecordPredictor& predict,
                                                    std::size_t max_in_flight = 1) {
  std::vector<DatasetOutcome> out(test.size());
  auto run_one = [&](std::size_t i) {
    out[i].dataset_id = test[i].dataset_id;
    out[i].truth = test[i].ground_truth;
    try {
      out[i].predicted = predict(test[i]);
    } catch (const std::exception&) {
      out[i].predicted = std::nullopt;
    }
  };
  const std::size_t workers = std::min(std::max<std::size_t>(1, max_in_flight), test.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < test.size(); ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < test.size(); i = next++) run_one(i);
      });
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark driver

/// Full-portfolio predictor used for agent runs: receives the query and the
/// whole portfolio (the callee is responsible for excluding the query from
/// any exemplars it draws).
using PortfolioPredictor = std::function<ModelLabel(const PortfolioRecord& query, const Portfolio& portfolio)>;

struct BenchmarkConfig {
  std::vector<std::string> methods{"euclid", "knn", "rfc", "tfidf"};
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  std::size_t knn_k = 3;
  std::size_t n_trees = 100;
  std::size_t baseline_trials = 1000;
  std::optional<EmbeddingTable> embeddings;  // overrides per-record embeddings for "embed"
  PortfolioPredictor agent;                  // required for "agent"
  std::string agent_label = "agent";
  std::size_t agent_max_in_flight = 4;
};

struct BenchmarkResult {
  std::vector<EvalReport> reports;
  BaselineResult random;
  BaselineResult frequency;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"euclid", "knn", "rfc", "tfidf", "embed", "agent"};
  return m;
}

namespace detail {

struct MetadataSplit {
  std::vector<LabeledPoint> train;
  Scaler scaler;
};

inline MetadataSplit standardized_train(const Portfolio& train) {
  std::vector<std::vector<double>> raw;
  for (const auto& r : train.records) raw.push_back(r.metadata.to_vector());
  MetadataSplit s{{}, Scaler::fit(raw)};
  for (const auto& r : train.records) s.train.push_back({r.dataset_id, s.scaler.standardize(r.metadata.to_vector()), r.ground_truth});
  return s;
}

inline const std::vector<double>* embedding_for(const PortfolioRecord& r, const std::optional<EmbeddingTable>& table) {
  if (table) return table->find(r.dataset_id);
  return r.embedding ? &*r.embedding : nullptr;
}

inline std::string format_fraction(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

/// Traditional methods are fitted on the stratified train split and scored
/// on the test split; the agent is scored on the whole portfolio. Baselines
/// are computed over the whole portfolio's truths.
/// Records are processed in dataset_id order, so the result does not
/// depend on input order.
inline BenchmarkResult run_benchmark(const Portfolio& input, const BenchmarkConfig& config) {
  if (input.empty()) throw Error(ErrorCode::EmptyTrainingSet, "empty portfolio");
  Portfolio portfolio = input;
  std::sort(portfolio.records.begin(), portfolio.records.end(),
            [](const auto& a, const auto& b) { return a.dataset_id < b.dataset_id; });
  const auto all_truths = portfolio.truths();
  {
    const auto counts = label_counts(all_truths);
    if (std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) < 2) {
      throw Error(ErrorCode::SingleClass, "portfolio needs at least two distinct ground-truth labels");
    }
  }

  BenchmarkResult result;
  result.random = random_baseline(all_truths, config.baseline_trials, config.seed);
  result.frequency = frequency_baseline(all_truths, all_truths);

  const auto [train, test] = stratified_split(portfolio, config.test_fraction, config.seed);
  result.n_train = train.size();
  result.n_test = test.size();
  const std::map<std::string, std::string> split_cfg{{"test_fraction", detail::format_fraction(config.test_fraction)},
                                                     {"mode", "split"}};

  std::optional<detail::MetadataSplit> meta;
  auto metadata = [&]() -> const detail::MetadataSplit& {
    if (!meta) meta = detail::standardized_train(train);
    return *meta;
  };

  for (const auto& method : config.methods) {
    auto cfg = split_cfg;
    if (method == "euclid") {
      const auto& m = metadata();
      auto outcomes = evaluate_records(test.records, [&](const PortfolioRecord& r) {
        return predict_1nn_euclidean(m.train, m.scaler.standardize(r.metadata.to_vector()), r.dataset_id).label;
      });
      result.reports.push_back(make_report(method, std::move(outcomes), config.seed, cfg));
    } else if (method == "knn") {
      const auto& m = metadata();
      cfg["k"] = std::to_string(config.knn_k);
      auto outcomes = evaluate_records(test.records, [&](const PortfolioRecord& r) {
        return predict_knn(m.train, m.scaler.standardize(r.metadata.to_vector()), config.knn_k, r.dataset_id).label;
      });
      result.reports.push_back(make_report(method, std::move(outcomes), config.seed, cfg));
    } else if (method == "rfc") {
      const auto& m = metadata();
      cfg["n_trees"] = std::to_string(config.n_trees);
      const auto forest = fit_random_forest(m.train, ForestParams{config.n_trees, config.seed});
      auto outcomes = evaluate_records(test.records, [&](const PortfolioRecord& r) {
        return predict_forest(forest, m.scaler.standardize(r.metadata.to_vector()), r.dataset_id).label;
      });
      result.reports.push_back(make_report(method, std::move(outcomes), config.seed, cfg));
    } else if (method == "tfidf") {
      std::vector<std::string> corpus;
      for (const auto& r : train.records) corpus.push_back(r.description);
      const auto model = TfIdfModel::fit(corpus);
      std::vector<TextPoint<SparseVector>> points;
      for (const auto& r : train.records) {
        auto v = model.vectorize(r.description);
        if (!is_zero(v)) points.push_back({r.dataset_id, std::move(v), r.ground_truth});
      }
      auto outcomes = evaluate_records(test.records, [&](const PortfolioRecord& r) {
        return predict_text_nn<SparseVector>(points, model.vectorize(r.description), r.dataset_id, "tfidf").label;
      });
      result.reports.push_back(make_report(method, std::move(outcomes), config.seed, cfg));
    } else if (method == "embed") {
      std::vector<TextPoint<std::vector<double>>> points;
      for (const auto& r : train.records) {
        if (const auto* v = detail::embedding_for(r, config.embeddings)) points.push_back({r.dataset_id, *v, r.ground_truth});
      }
      auto outcomes = evaluate_records(test.records, [&](const PortfolioRecord& r) {
        const auto* v = detail::embedding_for(r, config.embeddings);
        if (!v) throw Error(ErrorCode::ZeroVector, "no embedding for " + r.dataset_id);
        return predict_text_nn<std::vector<double>>(points, *v, r.dataset_id, "embed").label;
      });
      result.reports.push_back(make_report(method, std::move(outcomes), config.seed, cfg));
    } else if (method == "agent") {
      if (!config.agent) throw Error(ErrorCode::EmptyTrainingSet, "agent method requested without an agent");
      auto outcomes = evaluate_records(
          portfolio.records, [&](const PortfolioRecord& r) { return config.agent(r, portfolio); },
          config.agent_max_in_flight);
      result.reports.push_back(
          make_report(config.agent_label, std::move(outcomes), config.seed, {{"mode", "full_portfolio"}}));
    } else {
      throw Error(ErrorCode::ParseError, "unknown method '" + method + "'");
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string_view to_string(BaselineKind kind) {
  return kind == BaselineKind::RandomUniform ? "RandomUniform" : "MostFrequent";
}

inline nlohmann::ordered_json to_json(const Prediction& p) {
  nlohmann::ordered_json j;
  j["dataset_id"] = p.dataset_id;
  j["label"] = std::string(to_string(p.label));
  j["family"] = std::string(to_string(p.family));
  j["method"] = p.method;
  j["rationale"] = p.rationale ? nlohmann::ordered_json(*p.rationale) : nlohmann::ordered_json(nullptr);
  j["neighbor_ids"] = p.neighbor_ids ? nlohmann::ordered_json(*p.neighbor_ids) : nlohmann::ordered_json(nullptr);
  return j;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.config) j["config"][k] = v;
  j["family_accuracy"] = r.family_accuracy;
  j["model_accuracy"] = r.model_accuracy;
  j["n_test"] = r.n_test;
  j["seed"] = r.seed;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& o : r.per_dataset) {
    nlohmann::ordered_json row;
    row["dataset_id"] = o.dataset_id;
    row["predicted"] = o.predicted ? nlohmann::ordered_json(std::string(to_string(*o.predicted))) : nlohmann::ordered_json(nullptr);
    row["truth"] = std::string(to_string(o.truth));
    row["family_match"] = o.family_match;
    row["model_match"] = o.model_match;
    rows.push_back(std::move(row));
  }
  j["per_dataset"] = std::move(rows);
  return j;
}

inline nlohmann::ordered_json to_json(const BaselineResult& b) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(b.kind));
  j["family_accuracy"] = b.family_accuracy;
  j["model_accuracy"] = b.model_accuracy;
  if (b.kind == BaselineKind::RandomUniform) j["trials"] = b.trials;
  return j;
}

inline nlohmann::ordered_json to_json(const BenchmarkResult& r) {
  nlohmann::ordered_json j;
  j["n_train"] = r.n_train;
  j["n_test"] = r.n_test;
  j["baselines"] = nlohmann::ordered_json::array({to_json(r.random), to_json(r.frequency)});
  auto reports = nlohmann::ordered_json::array();
  for (const auto& rep : r.reports) reports.push_back(to_json(rep));
  j["reports"] = std::move(reports);
  return j;
}

/// Method, family accuracy, model accuracy; baselines first.
inline std::string summary_csv(const BenchmarkResult& r) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "method,family_accuracy,model_accuracy\n";
  os << "Baseline 1 (Random)," << r.random.family_accuracy << ',' << r.random.model_accuracy << '\n';
  os << "Baseline 2 (Frequency)," << r.frequency.family_accuracy << ',' << r.frequency.model_accuracy << '\n';
  for (const auto& rep : r.reports) os << rep.method << ',' << rep.family_accuracy << ',' << rep.model_accuracy << '\n';
  return os.str();
}

}  // namespace prehoc
