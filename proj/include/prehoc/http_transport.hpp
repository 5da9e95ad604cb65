#pragma once

// HTTP(S) transport for chat_complete, backed by cpp-httplib. HTTPS needs
// CPPHTTPLIB_OPENSSL_SUPPORT and linking against OpenSSL.

#include <string>
#include <string_view>

#include "httplib.h"
#include "prehoc/agent.hpp"

namespace prehoc::agent {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline ParsedUrl split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw Error(ErrorCode::EndpointUnreachable, "bad URL " + std::string(url));
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

inline ChatTransport http_transport() {
  return [](const HttpRequest& req) -> HttpResponse {
    const auto url = split_url(req.url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(req.timeout_seconds, 0);
    client.set_read_timeout(req.timeout_seconds, 0);
    client.set_write_timeout(req.timeout_seconds, 0);
    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : req.headers) {
      if (k == "Content-Type") content_type = v;
      else headers.emplace(k, v);
    }
    auto res = client.Post(url.path, headers, req.body, content_type);
    if (!res) return {0, {}, httplib::to_string(res.error())};
    return {res->status, res->body, {}};
  };
}

}  // namespace prehoc::agent
