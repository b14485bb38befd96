// Copyright 2026 The dail-harness Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// OpenAI-compatible POST {endpoint}/chat/completions backend.

#pragma once

#include <chrono>
#include <string>

#include "dail/error.hpp"
#include "dail/provider.hpp"
#include "httplib.h"
#include "json.hpp"

namespace dail {

struct HttpEndpoint {
  std::string origin;     // scheme://host[:port]
  std::string base_path;  // e.g. "/v1", never with a trailing slash

  static HttpEndpoint parse(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(ErrorCode::kConfigError, "endpoint '" + url + "' lacks a scheme");
    }
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
      throw Error(ErrorCode::kConfigError, "unsupported endpoint scheme '" + scheme + "'");
    }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (scheme == "https") {
      throw Error(ErrorCode::kConfigError, "built without TLS support; https endpoints unavailable");
    }
#endif
    const auto path_start = url.find('/', scheme_end + 3);
    HttpEndpoint ep;
    ep.origin = url.substr(0, path_start);
    ep.base_path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
    return ep;
  }
};

inline nlohmann::json chat_completion_body(const CompletionRequest& req) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : req.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return {{"model", req.model},
          {"messages", messages},
          {"temperature", req.temperature},
          {"top_p", req.top_p},
          {"max_tokens", req.max_tokens}};
}

class OpenAiCompatibleBackend : public Backend {
 public:
  OpenAiCompatibleBackend(const std::string& endpoint, std::string api_key,
                          std::chrono::seconds timeout = std::chrono::seconds(60))
      : endpoint_(HttpEndpoint::parse(endpoint)),
        url_(endpoint),
        api_key_(std::move(api_key)),
        timeout_(timeout) {}

  std::string id() const override { return "openai-compatible:" + url_; }

  std::string call(const CompletionRequest& request) override {
    httplib::Client client(endpoint_.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto res = client.Post(endpoint_.base_path + "/chat/completions", headers,
                                 chat_completion_body(request).dump(), "application/json");
    if (!res) {
      throw TransientError(TransientKind::kTransport, "transport: " + httplib::to_string(res.error()));
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
      throw Error(ErrorCode::kAuthError, "HTTP " + std::to_string(status) + ": " + res->body);
    }
    if (status == 429) throw TransientError(TransientKind::kThrottled, "HTTP 429");
    if (status >= 500) {
      throw TransientError(TransientKind::kServerError, "HTTP " + std::to_string(status));
    }
    if (status != 200) {
      throw Error(ErrorCode::kInvalidRequest, "HTTP " + std::to_string(status) + ": " + res->body);
    }
    try {
      const auto body = nlohmann::json::parse(res->body);
      const auto& content = body.at("choices").at(0).at("message").at("content");
      return content.is_null() ? std::string() : content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransientError(TransientKind::kServerError, std::string("bad response body: ") + e.what());
    }
  }

 private:
  HttpEndpoint endpoint_;
  std::string url_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

}  // namespace dail
