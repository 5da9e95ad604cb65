// prehoc: pre-hoc model selection from dataset meta-features and descriptions.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prehoc/agent.hpp"
#include "prehoc/evaluation.hpp"
#include "prehoc/http_transport.hpp"
#include "prehoc/portfolio_builder.hpp"
#include "prehoc/prehoc.hpp"

namespace fs = std::filesystem;
using namespace prehoc;

namespace {

std::optional<std::string> opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileUnreadable, p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw Error(ErrorCode::FileUnreadable, "cannot write " + p.string());
  out << text;
}

agent::PromptMode parse_mode(const std::string& m) {
  return m == "few" ? agent::PromptMode::FewShot : agent::PromptMode::ZeroShot;
}

std::shared_ptr<const agent::RagIndex> load_rag(const std::string& dir) {
  if (dir.empty()) return nullptr;
  return std::make_shared<const agent::RagIndex>(agent::RagIndex::from_directory(dir));
}

agent::AgentConfig agent_config(const std::string& mode, const std::string& rag_dir, std::size_t top_k) {
  auto cfg = agent::AgentConfig::from_env();
  if (cfg.endpoint_url.empty()) {
    throw Error(ErrorCode::EndpointUnreachable, "PREHOC_LLM_ENDPOINT is not set");
  }
  cfg.mode = parse_mode(mode);
  cfg.rag_enabled = !rag_dir.empty();
  cfg.rag_top_k = top_k;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pre-hoc model selection for tabular datasets"};
  app.require_subcommand(1);

  // extract
  auto* extract = app.add_subcommand("extract", "Compute the 11 meta-features of a CSV dataset");
  std::string ex_data, ex_target, ex_format = "both";
  extract->add_option("--data", ex_data, "CSV file with a header row")->required();
  extract->add_option("--target", ex_target, "Target column (default: last column)");
  extract->add_option("--format", ex_format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));

  // build-portfolio
  auto* build = app.add_subcommand("build-portfolio", "Assemble a portfolio JSONL from raw files");
  std::string bp_in, bp_out;
  build->add_option("--in", bp_in, "Input directory (results.csv, datasets/, ...)")->required();
  build->add_option("--out", bp_out, "Output JSONL path")->required();

  // predict
  auto* predict = app.add_subcommand("predict", "Recommend a model with a traditional predictor");
  std::string pr_portfolio, pr_method, pr_data, pr_target, pr_desc, pr_emb, pr_qid;
  std::uint64_t pr_seed = 0;
  std::size_t pr_k = 3, pr_trees = 100;
  predict->add_option("--portfolio", pr_portfolio)->required();
  predict->add_option("--method", pr_method)->required()->check(CLI::IsMember({"euclid", "knn", "rfc", "tfidf", "embed"}));
  predict->add_option("--data", pr_data, "CSV dataset to recommend for")->required();
  predict->add_option("--target", pr_target);
  predict->add_option("--description", pr_desc, "Text file with the dataset description (tfidf)");
  predict->add_option("--embeddings", pr_emb, "Embedding TSV holding the query vector (embed)");
  predict->add_option("--query-id", pr_qid, "Row id of the query in --embeddings (default: data file stem)");
  predict->add_option("--seed", pr_seed);
  predict->add_option("--k", pr_k, "Neighbors for knn");
  predict->add_option("--trees", pr_trees, "Trees for rfc");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Run the benchmark protocol over a portfolio");
  std::string ev_portfolio, ev_methods = "euclid,knn,rfc,tfidf", ev_out, ev_csv, ev_emb, ev_mode = "zero", ev_rag;
  std::uint64_t ev_seed = 0;
  std::size_t ev_trials = 1000, ev_top_k = 4, ev_in_flight = 4;
  double ev_fraction = 0.2;
  evaluate->add_option("--portfolio", ev_portfolio)->required();
  evaluate->add_option("--methods", ev_methods, "Comma list of euclid,knn,rfc,tfidf,embed,agent");
  evaluate->add_option("--seed", ev_seed);
  evaluate->add_option("--out", ev_out, "Report JSON path (default: stdout)");
  evaluate->add_option("--csv", ev_csv, "Also write a method/family/model accuracy summary CSV");
  evaluate->add_option("--embeddings", ev_emb, "Embedding TSV overriding the portfolio's vectors");
  evaluate->add_option("--test-fraction", ev_fraction);
  evaluate->add_option("--trials", ev_trials, "Random-baseline trials");
  evaluate->add_option("--mode", ev_mode, "Agent prompting: zero or few")->check(CLI::IsMember({"zero", "few"}));
  evaluate->add_option("--rag", ev_rag, "Documentation directory for agent retrieval");
  evaluate->add_option("--top-k", ev_top_k, "Retrieved chunks per prompt");
  evaluate->add_option("--max-in-flight", ev_in_flight, "Concurrent agent requests");

  // agent-predict
  auto* agent_cmd = app.add_subcommand("agent-predict", "Ask the LLM agent for a recommendation");
  std::string ag_data, ag_target, ag_mode = "zero", ag_rag, ag_portfolio;
  std::size_t ag_top_k = 4;
  agent_cmd->add_option("--data", ag_data)->required();
  agent_cmd->add_option("--target", ag_target);
  agent_cmd->add_option("--mode", ag_mode)->check(CLI::IsMember({"zero", "few"}));
  agent_cmd->add_option("--rag", ag_rag, "Documentation directory");
  agent_cmd->add_option("--portfolio", ag_portfolio, "Portfolio JSONL (required for few-shot)");
  agent_cmd->add_option("--top-k", ag_top_k);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*extract) {
      const auto ds = load_dataset(ex_data, opt(ex_target));
      const auto md = compute_metadata(ds);
      if (ex_format != "json") std::cout << metadata_csv_header() << '\n' << metadata_csv_row(md) << '\n';
      if (ex_format == "both") std::cout << '\n';
      if (ex_format != "csv") {
        nlohmann::ordered_json j;
        j["dataset_id"] = ds.id;
        j["task"] = std::string(to_string(ds.task));
        j["metadata"] = to_json(md);
        std::cout << j.dump(2) << '\n';
      }
    } else if (*build) {
      const auto p = build_portfolio(bp_in);
      save_portfolio(p, bp_out);
      std::cerr << "wrote " << p.size() << " records to " << bp_out << '\n';
    } else if (*predict) {
      const auto portfolio = load_portfolio(pr_portfolio);
      if (portfolio.empty()) throw Error(ErrorCode::EmptyTrainingSet, "portfolio is empty");
      const auto ds = load_dataset(pr_data, opt(pr_target));
      const auto md = compute_metadata(ds);
      Prediction out;
      if (pr_method == "euclid" || pr_method == "knn" || pr_method == "rfc") {
        std::vector<std::vector<double>> raw;
        for (const auto& r : portfolio.records) raw.push_back(r.metadata.to_vector());
        const auto scaler = Scaler::fit(raw);
        std::vector<LabeledPoint> train;
        for (const auto& r : portfolio.records) train.push_back({r.dataset_id, scaler.standardize(r.metadata.to_vector()), r.ground_truth});
        const auto q = scaler.standardize(md.to_vector());
        if (pr_method == "euclid") out = predict_1nn_euclidean(train, q, ds.id);
        else if (pr_method == "knn") out = predict_knn(train, q, pr_k, ds.id);
        else out = predict_forest(fit_random_forest(train, ForestParams{pr_trees, pr_seed}), q, ds.id);
      } else if (pr_method == "tfidf") {
        if (pr_desc.empty()) throw Error(ErrorCode::ZeroVector, "--description is required for tfidf");
        std::vector<std::string> corpus;
        for (const auto& r : portfolio.records) corpus.push_back(r.description);
        const auto model = TfIdfModel::fit(corpus);
        std::vector<TextPoint<SparseVector>> train;
        for (const auto& r : portfolio.records) {
          auto v = model.vectorize(r.description);
          if (!is_zero(v)) train.push_back({r.dataset_id, std::move(v), r.ground_truth});
        }
        try {
          out = predict_text_nn<SparseVector>(train, model.vectorize(read_file(pr_desc)), ds.id, "tfidf");
        } catch (const Error& e) {
          if (e.code() != ErrorCode::ZeroVector) throw;
          out = Prediction(ds.id, most_frequent_label(portfolio.truths()), "tfidf");
          out.rationale = "description shares no vocabulary with the portfolio; fell back to the most frequent label";
        }
      } else {
        if (pr_emb.empty()) throw Error(ErrorCode::ZeroVector, "--embeddings is required for embed");
        const auto table = load_embeddings(pr_emb);
        const auto qid = pr_qid.empty() ? ds.id : pr_qid;
        const auto* q = table.find(qid);
        if (!q) throw Error(ErrorCode::ZeroVector, "no embedding for " + qid);
        std::vector<TextPoint<std::vector<double>>> train;
        for (const auto& r : portfolio.records) {
          if (r.dataset_id == qid) continue;
          const auto* v = table.find(r.dataset_id);
          if (!v && r.embedding) v = &*r.embedding;
          if (v) train.push_back({r.dataset_id, *v, r.ground_truth});
        }
        out = predict_text_nn<std::vector<double>>(train, *q, ds.id, "embed");
      }
      std::cout << to_json(out).dump(2) << '\n';
    } else if (*evaluate) {
      const auto portfolio = load_portfolio(ev_portfolio);
      BenchmarkConfig cfg;
      cfg.methods.clear();
      std::stringstream ss(ev_methods);
      for (std::string m; std::getline(ss, m, ',');) {
        if (!m.empty()) cfg.methods.push_back(m);
      }
      cfg.seed = ev_seed;
      cfg.test_fraction = ev_fraction;
      cfg.baseline_trials = ev_trials;
      if (!ev_emb.empty()) cfg.embeddings = load_embeddings(ev_emb);
      if (std::find(cfg.methods.begin(), cfg.methods.end(), "agent") != cfg.methods.end()) {
        auto acfg = agent_config(ev_mode, ev_rag, ev_top_k);
        cfg.agent_label = "agent:" + acfg.model_name + ":" + std::string(agent::to_string(acfg.mode)) +
                          (acfg.rag_enabled ? ":rag" : ":norag");
        cfg.agent = agent::make_portfolio_predictor(acfg, agent::http_transport(), load_rag(ev_rag));
        cfg.agent_max_in_flight = ev_in_flight;
      }
      const auto result = run_benchmark(portfolio, cfg);
      const auto json = to_json(result).dump(2);
      if (ev_out.empty()) std::cout << json << '\n';
      else write_file(ev_out, json + "\n");
      if (!ev_csv.empty()) write_file(ev_csv, summary_csv(result));
    } else if (*agent_cmd) {
      auto cfg = agent_config(ag_mode, ag_rag, ag_top_k);
      Portfolio portfolio;
      if (!ag_portfolio.empty()) portfolio = load_portfolio(ag_portfolio);
      if (cfg.mode == agent::PromptMode::FewShot && portfolio.empty()) {
        throw Error(ErrorCode::EmptyTrainingSet, "few-shot prompting needs --portfolio");
      }
      const auto ds = load_dataset(ag_data, opt(ag_target));
      const auto md = compute_metadata(ds);
      const auto rag = load_rag(ag_rag);
      const auto resp = agent::agent_predict(md, portfolio.records, cfg, agent::http_transport(), rag.get(), ds.id);
      nlohmann::ordered_json j;
      j["dataset_id"] = ds.id;
      j["label"] = std::string(to_string(resp.label));
      j["family"] = std::string(to_string(family_of(resp.label)));
      j["method"] = "agent";
      j["rationale"] = resp.rationale;
      j["attempts"] = resp.attempts;
      std::cout << j.dump(2) << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
