#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstddef>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "prehoc/error.hpp"
#include "prehoc/evaluation.hpp"
#include "prehoc/meta_features.hpp"
#include "prehoc/portfolio.hpp"
#include "prehoc/taxonomy.hpp"
#include "prehoc/text_features.hpp"

namespace prehoc::agent {

enum class PromptMode { ZeroShot, FewShot };

inline std::string_view to_string(PromptMode m) { return m == PromptMode::ZeroShot ? "ZeroShot" : "FewShot"; }

inline constexpr std::size_t kMaxChunkChars = 1200;

struct RagChunk {
  std::string source_doc;
  std::string text;
  double score = 0.0;

  bool operator==(const RagChunk&) const = default;
};

struct Exemplar {
  DatasetMetadata metadata;
  ModelLabel label = ModelLabel::CatBoost;

  bool operator==(const Exemplar&) const = default;
};

struct AgentConfig {
  std::string endpoint_url;
  std::string model_name;
  std::string api_key;
  double temperature = 0.0;
  int max_retries = 2;
  int timeout_seconds = 60;
  PromptMode mode = PromptMode::ZeroShot;
  bool rag_enabled = false;
  std::size_t rag_top_k = 4;
  std::chrono::milliseconds backoff_base{500};

  /// Reads PREHOC_LLM_ENDPOINT, PREHOC_LLM_API_KEY and PREHOC_LLM_MODEL.
  static AgentConfig from_env() {
    AgentConfig c;
    auto get = [](const char* name) {
      const char* v = std::getenv(name);
      return v ? std::string(v) : std::string();
    };
    c.endpoint_url = get("PREHOC_LLM_ENDPOINT");
    c.api_key = get("PREHOC_LLM_API_KEY");
    c.model_name = get("PREHOC_LLM_MODEL");
    return c;
  }
};

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  PromptMode mode = PromptMode::ZeroShot;
  bool rag_enabled = false;
  std::vector<Exemplar> exemplars;
  std::vector<RagChunk> retrieved;

  bool operator==(const PromptBundle&) const = default;
};

struct AgentResponse {
  ModelLabel label = ModelLabel::CatBoost;
  std::string rationale;
  std::string raw_text;
  int attempts = 0;
};

// ---------------------------------------------------------------------------
// Exemplars

/// One exemplar per label present in `train`: the record with the smallest
/// dataset_id, in label enumeration order. `exclude_id` drops the query
/// dataset when exemplars are drawn from a portfolio that contains it.
inline std::vector<Exemplar> select_exemplars(std::span<const PortfolioRecord> train,
                                              std::string_view exclude_id = {}) {
  std::array<const PortfolioRecord*, kNumLabels> pick{};
  bool any = false;
  for (const auto& r : train) {
    if (!exclude_id.empty() && r.dataset_id == exclude_id) continue;
    any = true;
    auto& slot = pick[index_of(r.ground_truth)];
    if (!slot || r.dataset_id < slot->dataset_id) slot = &r;
  }
  if (!any) throw Error(ErrorCode::EmptyTrainingSet, "no records to draw exemplars from");
  std::vector<Exemplar> out;
  for (auto* r : pick) {
    if (r) out.push_back({r->metadata, r->ground_truth});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Documentation retrieval

namespace detail {

inline bool is_blank(std::string_view line) { return csv::trim(line).empty(); }

/// Cuts at most `max` bytes without splitting a UTF-8 sequence.
inline std::size_t utf8_cut(std::string_view s, std::size_t max) {
  if (s.size() <= max) return s.size();
  std::size_t cut = max;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return cut == 0 ? max : cut;
}

}  // namespace detail

/// Paragraphs separated by blank lines, each hard-wrapped at kMaxChunkChars.
inline std::vector<std::string> split_chunks(std::string_view text) {
  std::vector<std::string> paragraphs;
  std::string current;
  std::istringstream in{std::string(text)};
  std::string line;
  auto flush = [&] {
    auto t = csv::trim(current);
    if (!t.empty()) paragraphs.emplace_back(t);
    current.clear();
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::is_blank(line)) {
      flush();
    } else {
      if (!current.empty()) current.push_back('\n');
      current += line;
    }
  }
  flush();

  std::vector<std::string> chunks;
  for (const auto& p : paragraphs) {
    std::string_view rest(p);
    while (!rest.empty()) {
      const auto cut = detail::utf8_cut(rest, kMaxChunkChars);
      chunks.emplace_back(rest.substr(0, cut));
      rest.remove_prefix(cut);
    }
  }
  return chunks;
}

/// TF-IDF index over documentation chunks.
class RagIndex {
 public:
  struct Entry {
    std::string source_doc;
    std::string text;
    std::size_t ordinal = 0;
  };

  static RagIndex from_documents(std::vector<std::pair<std::string, std::string>> docs) {
    RagIndex idx;
    std::sort(docs.begin(), docs.end());
    for (const auto& [name, body] : docs) {
      for (auto& chunk : split_chunks(body)) {
        idx.entries_.push_back({name, std::move(chunk), idx.entries_.size()});
      }
    }
    if (idx.entries_.empty()) throw Error(ErrorCode::EmptyCorpus, "documentation corpus has no text");
    std::vector<std::string> texts;
    for (const auto& e : idx.entries_) texts.push_back(e.text);
    idx.model_ = TfIdfModel::fit(texts);
    for (const auto& t : texts) idx.vectors_.push_back(idx.model_.vectorize(t));
    return idx;
  }

  /// Reads every .md and .txt file directly under `dir`.
  static RagIndex from_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw Error(ErrorCode::EmptyCorpus, dir.string() + " is not a directory");
    std::vector<std::pair<std::string, std::string>> docs;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const auto ext = prehoc::detail::lower(entry.path().extension().string());
      if (ext != ".md" && ext != ".txt") continue;
      std::ifstream in(entry.path(), std::ios::binary);
      if (!in) throw Error(ErrorCode::FileUnreadable, entry.path().string());
      std::ostringstream buf;
      buf << in.rdbuf();
      docs.emplace_back(entry.path().filename().string(), buf.str());
    }
    if (docs.empty()) throw Error(ErrorCode::EmptyCorpus, "no .md/.txt documents in " + dir.string());
    return from_documents(std::move(docs));
  }

  /// Top-k chunks by cosine similarity to `query`, best first; equal scores
  /// keep corpus order.
  std::vector<RagChunk> retrieve(std::string_view query, std::size_t top_k) const {
    const auto q = model_.vectorize(query);
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      scored.emplace_back(std::clamp(cosine_similarity(vectors_[i], q), 0.0, 1.0), i);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<RagChunk> out;
    for (std::size_t i = 0; i < std::min(top_k, scored.size()); ++i) {
      const auto& e = entries_[scored[i].second];
      out.push_back({e.source_doc, e.text, scored[i].first});
    }
    return out;
  }

  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
  TfIdfModel model_;
  std::vector<SparseVector> vectors_;
};

inline std::vector<RagChunk> retrieve_docs(std::string_view query_text, const std::filesystem::path& corpus_dir,
                                           std::size_t top_k) {
  return RagIndex::from_directory(corpus_dir).retrieve(query_text, top_k);
}

// ---------------------------------------------------------------------------
// Prompt construction

namespace detail {

inline std::string format_value(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace detail

/// "- Number of samples: 150" lines, one per metadata field.
inline std::string render_metadata(const DatasetMetadata& md) {
  const auto values = md.to_array();
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += "- ";
    out += kMetadataDisplayNames[i];
    out += ": ";
    out += detail::format_value(values[i]);
    out += '\n';
  }
  return out;
}

inline std::string rag_query(const DatasetMetadata& md) {
  std::string q = "tabular model selection:";
  for (auto l : kAllLabels) {
    q += ' ';
    q += to_string(l);
  }
  q += '\n';
  q += render_metadata(md);
  return q;
}

inline const std::string& system_prompt() {
  static const std::string text =
      "You are an AutoML assistant. Your job is to select exactly one model for this tabular dataset "
      "from a fixed list of candidates, before any model is trained, using only the dataset's statistical "
      "description.\n"
      "Explain your reasoning in a few sentences. Then finish with a final line of the form\n"
      "MODEL: <name>\n"
      "where <name> is one of the candidate names spelled exactly as listed.";
  return text;
}

inline const std::string& strict_reminder() {
  static const std::string text =
      "\nYour previous answer did not name a candidate model. Reply again and end with exactly one line "
      "`MODEL: <name>`, where <name> is copied verbatim from the candidate list.\n";
  return text;
}

/// Sections, in order: candidates with families, documentation (RAG only),
/// solved examples (few-shot only), the query dataset, the answer format.
inline PromptBundle build_prompt(const DatasetMetadata& metadata, const AgentConfig& config,
                                 std::span<const Exemplar> exemplars, std::span<const RagChunk> chunks) {
  PromptBundle b;
  b.system_text = system_prompt();
  b.mode = config.mode;
  b.rag_enabled = config.rag_enabled;

  std::string u = "## Candidate models\n";
  for (auto l : kAllLabels) {
    u += "- ";
    u += to_string(l);
    u += " (";
    u += display_name(family_of(l));
    u += ")\n";
  }

  if (config.rag_enabled && !chunks.empty()) {
    b.retrieved.assign(chunks.begin(), chunks.end());
    u += "\n## Model documentation\n";
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      u += "[" + std::to_string(i + 1) + "] (source: " + chunks[i].source_doc + ")\n";
      u += chunks[i].text;
      u += "\n\n";
    }
  }

  if (config.mode == PromptMode::FewShot && !exemplars.empty()) {
    b.exemplars.assign(exemplars.begin(), exemplars.end());
    u += "\n## Solved examples\nEach block describes a past dataset and the model that performed best on it.\n";
    for (std::size_t i = 0; i < exemplars.size(); ++i) {
      u += "\n### Example " + std::to_string(i + 1) + "\n";
      u += render_metadata(exemplars[i].metadata);
      u += "Best model: ";
      u += to_string(exemplars[i].label);
      u += '\n';
    }
  }

  u += "\n## Dataset to solve\n";
  u += render_metadata(metadata);
  u += "\nSelect exactly one candidate model. End your answer with the line `MODEL: <name>`.\n";
  b.user_text = std::move(u);
  return b;
}

// ---------------------------------------------------------------------------
// Chat-completion transport

struct HttpRequest {
  std::string url;
  std::map<std::string, std::string> headers;
  std::string body;
  int timeout_seconds = 60;
};

/// status 0 means the request never got an HTTP response.
struct HttpResponse {
  int status = 0;
  std::string body;
  std::string error;
};

using ChatTransport = std::function<HttpResponse(const HttpRequest&)>;

struct ChatResult {
  std::string text;
  int attempts = 0;
};

inline std::string chat_request_body(const PromptBundle& bundle, const AgentConfig& config) {
  nlohmann::ordered_json j;
  j["model"] = config.model_name;
  j["temperature"] = config.temperature;
  j["messages"] = nlohmann::ordered_json::array({
      {{"role", "system"}, {"content", bundle.system_text}},
      {{"role", "user"}, {"content", bundle.user_text}},
  });
  return j.dump();
}

/// choices[0].message.content of a chat-completion response.
inline std::string extract_message_content(std::string_view body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::MalformedResponse, "response is not JSON");
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorCode::MalformedResponse, "response has no choices");
  }
  const auto& first = (*choices)[0];
  const auto msg = first.find("message");
  if (msg == first.end() || !msg->is_object()) throw Error(ErrorCode::MalformedResponse, "choice has no message");
  const auto content = msg->find("content");
  if (content == msg->end() || !content->is_string()) {
    throw Error(ErrorCode::MalformedResponse, "message has no text content");
  }
  return content->get<std::string>();
}

/// Sends one chat-completion request. Transport failures, 429 and 5xx are
/// retried up to `max_retries` times with exponential backoff; 401/403 fail
/// immediately.
inline ChatResult chat_complete(const PromptBundle& bundle, const AgentConfig& config, const ChatTransport& transport) {
  HttpRequest req;
  req.url = config.endpoint_url;
  req.headers["Content-Type"] = "application/json";
  if (!config.api_key.empty()) req.headers["Authorization"] = "Bearer " + config.api_key;
  req.body = chat_request_body(bundle, config);
  req.timeout_seconds = config.timeout_seconds;

  const int max_attempts = std::max(0, config.max_retries) + 1;
  std::optional<Error> last;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1 && config.backoff_base.count() > 0) {
      std::this_thread::sleep_for(config.backoff_base * (1 << std::min(attempt - 2, 10)));
    }
    const auto resp = transport(req);
    if (resp.status == 0) {
      last.emplace(ErrorCode::EndpointUnreachable, req.url + ": " + resp.error);
      continue;
    }
    if (resp.status == 401 || resp.status == 403) {
      throw Error(ErrorCode::AuthFailure, "HTTP " + std::to_string(resp.status) + " from " + req.url);
    }
    if (resp.status == 429) {
      last.emplace(ErrorCode::RateLimited, "HTTP 429 from " + req.url);
      continue;
    }
    if (resp.status >= 500) {
      last.emplace(ErrorCode::EndpointUnreachable, "HTTP " + std::to_string(resp.status) + " from " + req.url);
      continue;
    }
    if (resp.status < 200 || resp.status >= 300) {
      throw Error(ErrorCode::HttpError, "HTTP " + std::to_string(resp.status) + ": " + resp.body.substr(0, 200));
    }
    return {extract_message_content(resp.body), attempt};
  }
  throw *last;
}

// ---------------------------------------------------------------------------
// Response parsing

struct ModelChoice {
  ModelLabel label = ModelLabel::CatBoost;
  std::string rationale;
};

namespace detail {

/// The name on a "MODEL: <name>" line, with markdown emphasis, quotes and a
/// trailing period removed. Empty if the line is not a MODEL line.
inline std::string model_line_value(std::string_view line) {
  auto t = csv::trim(line);
  while (!t.empty() && (t.front() == '*' || t.front() == '`' || t.front() == '#')) t.remove_prefix(1);
  t = csv::trim(t);
  if (t.size() < 6 || !prehoc::detail::iequals(t.substr(0, 5), "model")) return {};
  t.remove_prefix(5);
  while (!t.empty() && (t.front() == '*' || t.front() == ' ')) t.remove_prefix(1);
  if (t.empty() || t.front() != ':') return {};
  t.remove_prefix(1);
  auto strip = [](std::string_view s) {
    s = csv::trim(s);
    while (!s.empty() && std::string_view("*`\"'<>.").find(s.front()) != std::string_view::npos) s.remove_prefix(1);
    while (!s.empty() && std::string_view("*`\"'<>.").find(s.back()) != std::string_view::npos) s.remove_suffix(1);
    return csv::trim(s);
  };
  return std::string(strip(t));
}

}  // namespace detail

/// Primary rule: the last "MODEL: <name>" line naming a candidate
/// (case-insensitive). Fallback: the earliest case-insensitive mention of a
/// candidate anywhere in the text. Throws NoModelFound otherwise.
inline ModelChoice parse_model_choice(std::string_view raw_text) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start <= raw_text.size();) {
    auto nl = raw_text.find('\n', start);
    if (nl == std::string_view::npos) nl = raw_text.size();
    lines.push_back(raw_text.substr(start, nl - start));
    start = nl + 1;
  }
  for (std::size_t i = lines.size(); i-- > 0;) {
    const auto value = detail::model_line_value(lines[i]);
    if (value.empty()) continue;
    if (auto label = parse_label_icase(value)) {
      std::string rationale;
      for (std::size_t k = 0; k < lines.size(); ++k) {
        if (k == i) continue;
        rationale += lines[k];
        rationale += '\n';
      }
      return {*label, std::string(csv::trim(rationale))};
    }
  }

  const auto low = prehoc::detail::lower(raw_text);
  std::optional<ModelLabel> best;
  std::size_t best_pos = std::string::npos;
  for (auto l : kAllLabels) {
    const auto pos = low.find(prehoc::detail::lower(to_string(l)));
    if (pos == std::string::npos) continue;
    if (pos < best_pos || (pos == best_pos && to_string(l).size() > to_string(*best).size())) {
      best = l;
      best_pos = pos;
    }
  }
  if (!best) throw Error(ErrorCode::NoModelFound, "no candidate model named in response");
  return {*best, std::string(csv::trim(raw_text))};
}

// ---------------------------------------------------------------------------
// Agent

/// Exemplars (few-shot), retrieval (when enabled), prompt, call, parse. An
/// unparseable answer gets one re-prompt with a stricter reminder before
/// NoModelFound is raised.
inline AgentResponse agent_predict(const DatasetMetadata& metadata, std::span<const PortfolioRecord> train,
                                   const AgentConfig& config, const ChatTransport& transport,
                                   const RagIndex* rag = nullptr, std::string_view exclude_id = {}) {
  std::vector<Exemplar> exemplars;
  if (config.mode == PromptMode::FewShot) exemplars = select_exemplars(train, exclude_id);
  std::vector<RagChunk> chunks;
  if (config.rag_enabled) {
    if (!rag) throw Error(ErrorCode::EmptyCorpus, "retrieval enabled without a documentation index");
    chunks = rag->retrieve(rag_query(metadata), std::max<std::size_t>(1, config.rag_top_k));
  }
  auto bundle = build_prompt(metadata, config, exemplars, chunks);

  auto first = chat_complete(bundle, config, transport);
  try {
    auto choice = parse_model_choice(first.text);
    return {choice.label, std::move(choice.rationale), std::move(first.text), first.attempts};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoModelFound) throw;
  }
  bundle.user_text += strict_reminder();
  auto second = chat_complete(bundle, config, transport);
  auto choice = parse_model_choice(second.text);
  return {choice.label, std::move(choice.rationale), std::move(second.text), second.attempts};
}

/// Adapter for full-portfolio evaluation: exemplars come from the portfolio
/// with the query dataset removed.
inline PortfolioPredictor make_portfolio_predictor(AgentConfig config, ChatTransport transport,
                                                   std::shared_ptr<const RagIndex> rag = nullptr) {
  return [config = std::move(config), transport = std::move(transport), rag = std::move(rag)](
             const PortfolioRecord& query, const Portfolio& portfolio) {
    return agent_predict(query.metadata, portfolio.records, config, transport, rag.get(), query.dataset_id).label;
  };
}

}  // namespace prehoc::agent
