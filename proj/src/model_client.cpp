// Copyright 2026 The extractaudit Authors
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

#include "extractaudit/model_client.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "extractaudit/errors.hpp"
#include "extractaudit/hash.hpp"

namespace extractaudit {

std::string endpoint_fingerprint(const CompletionEndpoint& endpoint) {
  return hex64(fnv1a64(endpoint.base_url + "|" + endpoint.model_name));
}

HttpCompletionClient::HttpCompletionClient(CompletionEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {
  const std::string& url = endpoint_.base_url;
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw UsageError("endpoint base_url must include a scheme: " + url);
  }
  const auto path = url.find('/', scheme + 3);
  if (path == std::string::npos) {
    host_part_ = url;
  } else {
    host_part_ = url.substr(0, path);
    path_prefix_ = url.substr(path);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
  if (endpoint_.parallelism_bound < 1) {
    throw UsageError("parallelism_bound must be >= 1");
  }
}

std::string HttpCompletionClient::fingerprint() const {
  return endpoint_fingerprint(endpoint_);
}

std::string HttpCompletionClient::complete(const CompletionRequest& request) {
  if (request.max_new_tokens < 1) {
    throw UsageError("max_new_tokens must be >= 1");
  }
  nlohmann::json body = {{"model", endpoint_.model_name},
                         {"prompt", request.prefix_text},
                         {"max_tokens", request.max_new_tokens},
                         {"temperature", 0.0}};
  if (!request.stop.empty()) body["stop"] = request.stop;
  const std::string payload = body.dump();

  std::string last_failure;
  int attempts = 0;
  while (attempts <= endpoint_.max_retries) {
    ++attempts;
    httplib::Client cli(host_part_);
    cli.set_connection_timeout(std::chrono::milliseconds(endpoint_.timeout_ms));
    cli.set_read_timeout(std::chrono::milliseconds(endpoint_.timeout_ms));
    cli.set_write_timeout(std::chrono::milliseconds(endpoint_.timeout_ms));
    auto res = cli.Post(path_prefix_ + "/v1/completions", payload, "application/json");
    if (res) {
      if (res->status != 200) throw ProtocolError(res->status, res->body);
      nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
      if (reply.is_discarded() || !reply.contains("choices") ||
          !reply["choices"].is_array() || reply["choices"].empty() ||
          !reply["choices"][0].contains("text") ||
          !reply["choices"][0]["text"].is_string()) {
        throw ProtocolError(200, "malformed completion response");
      }
      return reply["choices"][0]["text"].get<std::string>();
    }
    last_failure = httplib::to_string(res.error());
    if (attempts <= endpoint_.max_retries) {
      const auto delay = endpoint_.backoff_base_ms * (1 << (attempts - 1));
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
  }
  throw TransportError("completion endpoint " + endpoint_.base_url + ": " + last_failure,
                       attempts);
}

}  // namespace extractaudit
