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

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace extractaudit {

// A single greedy-completion query. Decoding is always greedy (temperature
// 0); that is pinned in the wire protocol rather than configurable.
struct CompletionRequest {
  std::string prefix_text;
  int max_new_tokens = 50;
  std::vector<std::string> stop;  // optional stop sequences; default none
};

struct CompletionEndpoint {
  std::string base_url;
  std::string model_name;
  int timeout_ms = 30000;
  int max_retries = 3;
  unsigned parallelism_bound = 8;
  int backoff_base_ms = 100;
};

// Black-box access to the model under audit. Implementations must be safe for
// concurrent complete() calls up to parallelism_bound.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;

  virtual std::string complete(const CompletionRequest& request) = 0;
  virtual unsigned parallelism_bound() const {
    return std::numeric_limits<unsigned>::max();
  }
  virtual std::string fingerprint() const = 0;
};

// Client for the completion wire protocol:
//   POST {base_url}/v1/completions
//   {"model": ..., "prompt": ..., "max_tokens": ..., "temperature": 0.0}
//   -> 200 {"choices": [{"text": ...}]}
// Transport errors and timeouts are retried up to max_retries with
// exponential backoff; non-200 responses are protocol errors and are never
// retried.
class HttpCompletionClient : public CompletionBackend {
 public:
  explicit HttpCompletionClient(CompletionEndpoint endpoint);

  std::string complete(const CompletionRequest& request) override;
  unsigned parallelism_bound() const override { return endpoint_.parallelism_bound; }
  std::string fingerprint() const override;

  const CompletionEndpoint& endpoint() const { return endpoint_; }

 private:
  CompletionEndpoint endpoint_;
  std::string host_part_;  // scheme://host:port
  std::string path_prefix_;
};

std::string endpoint_fingerprint(const CompletionEndpoint& endpoint);

}  // namespace extractaudit
