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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "extractaudit/model_client.hpp"
#include "extractaudit/tokenizer.hpp"

namespace extractaudit {

struct BenchmarkSet;

// Recall probability as a function of duplication count: either a constant or
// min(1, slope * d).
struct MemProbability {
  bool linear = false;
  double constant = 1.0;
  double slope = 0.0;

  double operator()(std::uint64_t dup_count) const {
    if (!linear) return constant;
    double p = slope * static_cast<double>(dup_count);
    return p > 1.0 ? 1.0 : p;
  }

  static MemProbability constant_p(double p) { return {false, p, 0.0}; }
  static MemProbability linear_in_dup(double slope) { return {true, 0.0, slope}; }

  nlohmann::json to_json() const;
};

struct MockEntry {
  TokenSeq prefix;
  TokenSeq suffix;
  std::uint64_t dup_count = 1;
  // Per-entry minimum matched context; falls back to the mock-wide value.
  std::optional<std::size_t> min_context;
};

// Deterministic stand-in for the model under audit. A stored entry is
// recalled by a query iff
//   (1) the entry prefix's last |q| tokens equal the query tokens q,
//   (2) |q| >= the entry's minimum context (or the mock-wide default), and
//   (3) unit_interval_hash(seed, entry_ordinal) < mem_prob(entry.dup_count).
// If any entry is recalled the lowest ordinal wins and its suffix is decoded;
// otherwise the output is filler: the query's last token repeated
// max_new_tokens times (never a stored suffix for non-degenerate stores).
// Output is a pure function of (store, config, seed, request).
class MockMemorizer : public CompletionBackend {
 public:
  MockMemorizer(std::vector<MockEntry> store, MemProbability mem_prob,
                std::size_t min_context, std::uint64_t seed,
                std::shared_ptr<Tokenizer> tok);

  std::string complete(const CompletionRequest& request) override;
  std::string fingerprint() const override;

  const std::vector<MockEntry>& store() const { return store_; }
  const MemProbability& mem_prob() const { return mem_prob_; }
  std::size_t min_context() const { return min_context_; }
  std::uint64_t seed() const { return seed_; }
  Tokenizer& tokenizer() { return *tok_; }
  std::shared_ptr<Tokenizer> tokenizer_ptr() const { return tok_; }

 private:
  std::vector<MockEntry> store_;
  MemProbability mem_prob_;
  std::size_t min_context_;
  std::uint64_t seed_;
  std::shared_ptr<Tokenizer> tok_;
};

// Plants every benchmark sample (full prefix, suffix, dup_count) in ordinal
// order.
std::vector<MockEntry> store_from_benchmark(const BenchmarkSet& bench);

// Serves the completion wire protocol backed by a MockMemorizer. Also mounts
// the tokenize/detokenize protocol over the mock's tokenizer so external-
// tokenizer clients can be tested end to end. Safe under concurrent requests.
class MockServer {
 public:
  explicit MockServer(std::shared_ptr<MockMemorizer> mock);
  ~MockServer();

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Binds and starts serving on a background thread; port 0 picks an
  // ephemeral port. Returns the bound port; throws Error on bind failure.
  int start(const std::string& host, int port);
  void stop();

  const std::string& base_url() const { return base_url_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string base_url_;
};

}  // namespace extractaudit
