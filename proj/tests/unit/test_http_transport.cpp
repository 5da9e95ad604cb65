#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "prehoc/http_transport.hpp"
#include "support/synthetic.hpp"

namespace prehoc::agent {
namespace {

namespace t = prehoc::testing;

class LocalServer {
 public:
  explicit LocalServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

AgentConfig config_for(const std::string& url) {
  auto c = t::mock_config();
  c.endpoint_url = url;
  c.api_key = "secret";
  c.timeout_seconds = 5;
  return c;
}

TEST(SplitUrl, Parts) {
  const auto u = split_url("https://api.example.com:8443/v1/chat/completions");
  EXPECT_EQ(u.origin, "https://api.example.com:8443");
  EXPECT_EQ(u.path, "/v1/chat/completions");
  EXPECT_EQ(split_url("http://h").path, "/");
  EXPECT_THROW(split_url("not a url"), Error);
}

TEST(HttpTransport, SuccessfulRoundTrip) {
  std::string auth, body;
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    body = req.body;
    res.set_content(t::chat_body("Small data.\nMODEL: TabPFN"), "application/json");
  });
  const auto p = t::make_portfolio({1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  const auto r = agent_predict(p.records[0].metadata, p.records, config_for(server.url()), http_transport());
  EXPECT_EQ(r.label, ModelLabel::TabPFN);
  EXPECT_EQ(r.attempts, 1);
  EXPECT_EQ(auth, "Bearer secret");
  EXPECT_EQ(nlohmann::json::parse(body)["messages"].size(), 2u);
}

TEST(HttpTransport, RetriesServerError) {
  std::atomic<int> hits{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    if (hits++ == 0) {
      res.status = 500;
      return;
    }
    res.set_content(t::chat_body("MODEL: LightGBM"), "application/json");
  });
  const PromptBundle b{};
  const auto r = chat_complete(b, config_for(server.url()), http_transport());
  EXPECT_EQ(r.attempts, 2);
  EXPECT_EQ(hits.load(), 2);
}

TEST(HttpTransport, AuthFailureIsNotRetried) {
  std::atomic<int> hits{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  try {
    chat_complete(PromptBundle{}, config_for(server.url()), http_transport());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AuthFailure);
  }
  EXPECT_EQ(hits.load(), 1);
}

TEST(HttpTransport, UnreachableEndpoint) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }  // closed again: nothing listens on `port`
  auto cfg = config_for("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions");
  cfg.max_retries = 1;
  try {
    chat_complete(PromptBundle{}, cfg, http_transport());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EndpointUnreachable);
  }
}

}  // namespace
}  // namespace prehoc::agent
