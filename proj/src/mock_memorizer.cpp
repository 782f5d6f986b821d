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

#include "extractaudit/mock_memorizer.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>

#include "extractaudit/bench.hpp"
#include "extractaudit/errors.hpp"
#include "extractaudit/hash.hpp"

namespace extractaudit {

nlohmann::json MemProbability::to_json() const {
  if (linear) return {{"kind", "linear"}, {"slope", slope}};
  return {{"kind", "constant"}, {"p", constant}};
}

MockMemorizer::MockMemorizer(std::vector<MockEntry> store, MemProbability mem_prob,
                             std::size_t min_context, std::uint64_t seed,
                             std::shared_ptr<Tokenizer> tok)
    : store_(std::move(store)),
      mem_prob_(mem_prob),
      min_context_(min_context),
      seed_(seed),
      tok_(std::move(tok)) {
  if (!tok_) throw UsageError("MockMemorizer: null tokenizer");
  for (const MockEntry& e : store_) {
    if (e.prefix.tokenizer_id != tok_->id() || e.suffix.tokenizer_id != tok_->id()) {
      throw UsageError("MockMemorizer: store entry tokenized with a different tokenizer");
    }
  }
}

std::string MockMemorizer::complete(const CompletionRequest& request) {
  if (request.max_new_tokens < 1) {
    throw UsageError("max_new_tokens must be >= 1");
  }
  const TokenSeq query = tok_->encode(request.prefix_text);
  if (query.empty()) return "";

  for (std::size_t i = 0; i < store_.size(); ++i) {
    const MockEntry& e = store_[i];
    if (query.size() > e.prefix.size()) continue;
    const auto tail = e.prefix.ids.end() - static_cast<std::ptrdiff_t>(query.size());
    if (!std::equal(query.ids.begin(), query.ids.end(), tail)) continue;
    if (query.size() < e.min_context.value_or(min_context_)) continue;
    if (unit_interval_hash(seed_, i) >= mem_prob_(e.dup_count)) continue;
    // Recalled; ties go to the lowest store ordinal, which this loop is.
    TokenSeq out = e.suffix;
    if (out.size() > static_cast<std::size_t>(request.max_new_tokens)) {
      out = slice(out, 0, static_cast<std::size_t>(request.max_new_tokens));
    }
    return tok_->decode(out);
  }

  // Filler: the last prompt token repeated. Distinguishable from any stored
  // suffix as long as planted suffixes are not a single token repeated.
  TokenSeq filler;
  filler.tokenizer_id = tok_->id();
  filler.ids.assign(static_cast<std::size_t>(request.max_new_tokens), query.ids.back());
  return tok_->decode(filler);
}

std::string MockMemorizer::fingerprint() const {
  std::uint64_t h = splitmix64(seed_);
  h = splitmix64(h ^ store_.size());
  h = splitmix64(h ^ static_cast<std::uint64_t>(min_context_));
  return "mock-" + hex64(h);
}

std::vector<MockEntry> store_from_benchmark(const BenchmarkSet& bench) {
  std::vector<MockEntry> store;
  store.reserve(bench.samples.size());
  for (const AttackSample& s : bench.samples) {
    store.push_back({s.prefix, s.suffix, s.dup_count, std::nullopt});
  }
  return store;
}

struct MockServer::Impl {
  std::shared_ptr<MockMemorizer> mock;
  httplib::Server server;
  std::thread thread;
};

MockServer::MockServer(std::shared_ptr<MockMemorizer> mock)
    : impl_(std::make_unique<Impl>()) {
  impl_->mock = std::move(mock);
  auto& srv = impl_->server;

  srv.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
    res.set_header("Content-Type", "application/json");
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      res.status = 400;
      res.body = nlohmann::json{{"error", "malformed JSON body"}}.dump();
      return;
    }
    if (!body.contains("prompt") || !body["prompt"].is_string()) {
      res.status = 400;
      res.body = nlohmann::json{{"error", "missing string field 'prompt'"}}.dump();
      return;
    }
    if (body.contains("temperature") && body["temperature"].is_number() &&
        body["temperature"].get<double>() != 0.0) {
      res.status = 400;
      res.body = nlohmann::json{{"error", "only temperature 0.0 (greedy) is supported"}}.dump();
      return;
    }
    CompletionRequest creq;
    creq.prefix_text = body["prompt"].get<std::string>();
    creq.max_new_tokens = body.value("max_tokens", 50);
    if (creq.max_new_tokens < 1) {
      res.status = 400;
      res.body = nlohmann::json{{"error", "max_tokens must be >= 1"}}.dump();
      return;
    }
    try {
      const std::string text = impl_->mock->complete(creq);
      res.body = nlohmann::json{{"choices", {{{"text", text}}}}}.dump();
    } catch (const std::exception& e) {
      res.status = 400;
      res.body = nlohmann::json{{"error", e.what()}}.dump();
    }
  });

  srv.Post("/tokenize", [this](const httplib::Request& req, httplib::Response& res) {
    res.set_header("Content-Type", "application/json");
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("text") || !body["text"].is_string()) {
      res.status = 400;
      res.body = nlohmann::json{{"error", "missing string field 'text'"}}.dump();
      return;
    }
    const TokenSeq seq = impl_->mock->tokenizer().encode(body["text"].get<std::string>());
    res.body = nlohmann::json{{"tokens", seq.ids}}.dump();
  });

  srv.Post("/detokenize", [this](const httplib::Request& req, httplib::Response& res) {
    res.set_header("Content-Type", "application/json");
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("tokens") || !body["tokens"].is_array()) {
      res.status = 400;
      res.body = nlohmann::json{{"error", "missing array field 'tokens'"}}.dump();
      return;
    }
    TokenSeq seq;
    seq.tokenizer_id = impl_->mock->tokenizer().id();
    try {
      seq.ids = body["tokens"].get<std::vector<TokenId>>();
      res.body = nlohmann::json{{"text", impl_->mock->tokenizer().decode(seq)}}.dump();
    } catch (const std::exception& e) {
      res.status = 400;
      res.body = nlohmann::json{{"error", e.what()}}.dump();
    }
  });
}

MockServer::~MockServer() { stop(); }

int MockServer::start(const std::string& host, int port) {
  auto& srv = impl_->server;
  int bound = port;
  if (port == 0) {
    bound = srv.bind_to_any_port(host);
    if (bound < 0) throw Error("mock server: cannot bind to " + host);
  } else {
    if (!srv.bind_to_port(host, port)) {
      throw Error("mock server: cannot bind to " + host + ":" + std::to_string(port));
    }
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  srv.wait_until_ready();
  base_url_ = "http://" + host + ":" + std::to_string(bound);
  return bound;
}

void MockServer::stop() {
  if (impl_ && impl_->thread.joinable()) {
    impl_->server.stop();
    impl_->thread.join();
  }
}

}  // namespace extractaudit
