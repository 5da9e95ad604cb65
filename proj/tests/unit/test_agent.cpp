#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>

#include "prehoc/agent.hpp"
#include "prehoc/evaluation.hpp"
#include "support/synthetic.hpp"

namespace prehoc::agent {
namespace {

using L = ModelLabel;
namespace t = prehoc::testing;

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

TEST(Exemplars, OnePerLabelSmallestId) {
  const auto p = t::make_portfolio({2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1});
  const auto ex = select_exemplars(p.records);
  ASSERT_EQ(ex.size(), 11u);
  for (std::size_t i = 0; i < ex.size(); ++i) EXPECT_EQ(ex[i].label, kAllLabels[i]);
  EXPECT_EQ(ex[0].metadata, p.records[0].metadata);  // ds_000 beats ds_001

  const auto q = t::make_portfolio({5, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  EXPECT_EQ(select_exemplars(q.records).size(), 1u);
  EXPECT_EQ(select_exemplars(q.records, "ds_000").front().metadata, q.records[1].metadata);
  EXPECT_THROW(select_exemplars(std::span<const PortfolioRecord>{}), Error);
}

TEST(Rag, RanksRelevantChunkFirst) {
  const auto idx = RagIndex::from_documents({
      {"boost.md", "Gradient boosting builds trees sequentially.\n\nBoosting handles categorical data."},
      {"knn.md", "Nearest neighbour methods store all samples."},
      {"linear.txt", "Linear models fit a weighted sum of features."},
  });
  EXPECT_EQ(idx.size(), 4u);
  const auto top = idx.retrieve("gradient boosting", 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].source_doc, "boost.md");
  EXPECT_NE(top[0].text.find("Gradient boosting"), std::string::npos);
  EXPECT_GE(top[0].score, top[1].score);
  EXPECT_EQ(idx.retrieve("anything", 99).size(), 4u);
  for (const auto& c : idx.retrieve("linear features", 4)) {
    EXPECT_GE(c.score, 0.0);
    EXPECT_LE(c.score, 1.0);
  }
}

TEST(Rag, ChunkWrapping) {
  const std::string para(3000, 'x');
  const auto chunks = split_chunks("short one\n\n" + para + "\n\n\n");
  ASSERT_EQ(chunks.size(), 4u);
  EXPECT_EQ(chunks[0], "short one");
  EXPECT_EQ(chunks[1].size(), 1200u);
  EXPECT_EQ(chunks[3].size(), 600u);
  EXPECT_TRUE(split_chunks("\n\n  \n").empty());
}

TEST(Rag, DirectoryErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "prehoc_empty_docs";
  std::filesystem::create_directories(dir);
  try {
    RagIndex::from_directory(dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCorpus);
  }
  std::ofstream(dir / "notes.md") << "TabPFN is a transformer for small tables.\n";
  std::ofstream(dir / "ignored.bin") << "binary";
  const auto hits = retrieve_docs("transformer", dir, 3);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].source_doc, "notes.md");
  std::filesystem::remove_all(dir);
}

TEST(Prompt, ZeroShotAndFewShot) {
  const auto p = t::make_portfolio({2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1});
  const auto ex = select_exemplars(p.records);
  auto cfg = t::mock_config(PromptMode::ZeroShot);
  const auto zero = build_prompt(p.records[0].metadata, cfg, ex, {});
  EXPECT_EQ(count_of(zero.user_text, "### Example"), 0u);
  EXPECT_TRUE(zero.exemplars.empty());

  cfg.mode = PromptMode::FewShot;
  const auto few = build_prompt(p.records[0].metadata, cfg, ex, {});
  EXPECT_EQ(count_of(few.user_text, "### Example"), 11u);
  for (auto l : kAllLabels) {
    EXPECT_EQ(count_of(few.user_text, "Best model: " + std::string(to_string(l)) + "\n"), 1u);
    EXPECT_EQ(count_of(few.user_text, "- " + std::string(to_string(l)) + " ("), 1u);
  }
  EXPECT_NE(few.system_text.find("MODEL: <name>"), std::string::npos);
  EXPECT_EQ(few, build_prompt(p.records[0].metadata, cfg, ex, {}));
  EXPECT_EQ(few.user_text.find(p.records[0].dataset_id), std::string::npos);
}

TEST(Prompt, RagSectionOnlyWhenEnabled) {
  const std::vector<RagChunk> chunks{{"doc.md", "SENTINEL-7731 corpus text", 0.5}};
  const DatasetMetadata md{};
  auto cfg = t::mock_config(PromptMode::ZeroShot, false);
  EXPECT_EQ(build_prompt(md, cfg, {}, chunks).user_text.find("SENTINEL-7731"), std::string::npos);
  cfg.rag_enabled = true;
  const auto b = build_prompt(md, cfg, {}, chunks);
  EXPECT_NE(b.user_text.find("SENTINEL-7731"), std::string::npos);
  EXPECT_NE(b.user_text.find("(source: doc.md)"), std::string::npos);
}

TEST(Chat, RequestShape) {
  auto cfg = t::mock_config();
  cfg.api_key = "k";
  const PromptBundle b{"sys", "user", PromptMode::ZeroShot, false, {}, {}};
  const auto j = nlohmann::json::parse(chat_request_body(b, cfg));
  EXPECT_EQ(j["model"], "mock");
  EXPECT_EQ(j["messages"][0]["role"], "system");
  EXPECT_EQ(j["messages"][1]["content"], "user");
  std::string auth;
  chat_complete(b, cfg, [&](const HttpRequest& r) {
    auth = r.headers.at("Authorization");
    return HttpResponse{200, t::chat_body("hi"), {}};
  });
  EXPECT_EQ(auth, "Bearer k");
}

ChatTransport scripted(std::vector<HttpResponse> script, std::atomic<int>& calls) {
  return [script = std::move(script), &calls](const HttpRequest&) {
    const auto i = static_cast<std::size_t>(calls++);
    return script[std::min(i, script.size() - 1)];
  };
}

TEST(Chat, RetriesTransientFailures) {
  const PromptBundle b{};
  std::atomic<int> calls{0};
  const auto r = chat_complete(b, t::mock_config(),
                               scripted({{0, "", "refused"}, {503, "", ""}, {200, t::chat_body("ok"), ""}}, calls));
  EXPECT_EQ(r.attempts, 3);
  EXPECT_EQ(r.text, "ok");

  calls = 0;
  try {
    chat_complete(b, t::mock_config(), scripted({{429, "", ""}}, calls));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RateLimited);
  }
  EXPECT_EQ(calls.load(), 3);
}

TEST(Chat, NonRetryableFailures) {
  const PromptBundle b{};
  std::atomic<int> calls{0};
  try {
    chat_complete(b, t::mock_config(), scripted({{401, "", ""}}, calls));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AuthFailure);
  }
  EXPECT_EQ(calls.load(), 1);

  calls = 0;
  try {
    chat_complete(b, t::mock_config(), scripted({{200, R"({"choices":[]})", ""}}, calls));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedResponse);
  }
  calls = 0;
  EXPECT_THROW(chat_complete(b, t::mock_config(), scripted({{400, "bad", ""}}, calls)), Error);
  EXPECT_EQ(calls.load(), 1);
}

TEST(ParseModelChoice, Rules) {
  EXPECT_EQ(parse_model_choice("Because it is small.\nMODEL: TabPFN").label, L::TabPFN);
  EXPECT_EQ(parse_model_choice("Because it is small.\nMODEL: TabPFN").rationale, "Because it is small.");
  EXPECT_EQ(parse_model_choice("MODEL: XGBoost\nactually\nMODEL: catboost").label, L::CatBoost);
  EXPECT_EQ(parse_model_choice("**Model:** `LightGBM`.").label, L::LightGBM);
  EXPECT_EQ(parse_model_choice("I would try xgboost, or maybe CatBoost").label, L::XGBoost);
  EXPECT_EQ(parse_model_choice("MODEL: SVM\nbut KNeighbors could also work").label, L::KNeighbors);
  try {
    parse_model_choice("No idea.");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoModelFound);
  }
}

TEST(AgentPredict, FixedReply) {
  const auto p = t::make_portfolio({2, 2, 2, 0, 0, 0, 0, 0, 0, 0, 0});
  std::atomic<int> calls{0};
  const auto cfg = t::mock_config(PromptMode::FewShot);
  for (const auto& r : p.records) {
    EXPECT_EQ(agent_predict(r.metadata, p.records, cfg, t::fixed_reply("MODEL: TabPFN", &calls), nullptr, r.dataset_id)
                  .label,
              L::TabPFN);
  }
  EXPECT_EQ(calls.load(), 6);
}

TEST(AgentPredict, InvalidReplyRepromptsOnce) {
  const auto p = t::make_portfolio({2, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  std::atomic<int> calls{0};
  std::vector<std::string> bodies;
  ChatTransport transport = [&](const HttpRequest& req) {
    ++calls;
    bodies.push_back(req.body);
    return HttpResponse{200, t::chat_body("I cannot decide."), {}};
  };
  try {
    agent_predict(p.records[0].metadata, p.records, t::mock_config(), transport);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoModelFound);
  }
  EXPECT_EQ(calls.load(), 2);
  EXPECT_EQ(bodies[0].find("did not name a candidate"), std::string::npos);
  EXPECT_NE(bodies[1].find("did not name a candidate"), std::string::npos);
}

TEST(AgentPredict, RagRequiresIndex) {
  const auto p = t::make_portfolio({1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  EXPECT_THROW(agent_predict(p.records[0].metadata, p.records, t::mock_config(PromptMode::ZeroShot, true),
                             t::fixed_reply("MODEL: TabPFN")),
               Error);
  const auto idx = RagIndex::from_documents({{"a.md", "CatBoost ordered boosting SENTINEL"}});
  std::string body;
  ChatTransport capture = [&](const HttpRequest& req) {
    body = req.body;
    return HttpResponse{200, t::chat_body("MODEL: CatBoost"), {}};
  };
  agent_predict(p.records[0].metadata, p.records, t::mock_config(PromptMode::ZeroShot, true), capture, &idx);
  EXPECT_NE(body.find("SENTINEL"), std::string::npos);
}

TEST(AgentPredict, UniformMockMatchesRandomBaseline) {
  // Averaged over independent mock seeds, as the random baseline averages trials.
  const auto p = t::make_portfolio(t::kPortfolio175);
  double fam = 0, mod = 0;
  const int runs = 10;
  BenchmarkResult last;
  for (int s = 0; s < runs; ++s) {
    BenchmarkConfig cfg;
    cfg.methods = {"agent"};
    cfg.agent = make_portfolio_predictor(t::mock_config(PromptMode::FewShot), t::uniform_random_reply(s));
    last = run_benchmark(p, cfg);
    EXPECT_EQ(last.reports.front().n_test, 175u);
    fam += last.reports.front().family_accuracy / runs;
    mod += last.reports.front().model_accuracy / runs;
  }
  EXPECT_NEAR(mod, last.random.model_accuracy, 0.03);
  EXPECT_NEAR(fam, last.random.family_accuracy, 0.03);
}

}  // namespace
}  // namespace prehoc::agent
