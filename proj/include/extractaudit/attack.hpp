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
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "extractaudit/bench.hpp"
#include "extractaudit/model_client.hpp"
#include "extractaudit/tokenizer.hpp"

namespace extractaudit {

enum class ComparisonMode { kTokenLevel, kStringLevel };
const char* comparison_name(ComparisonMode m);
ComparisonMode comparison_from_name(std::string_view name);

struct AttackConfig {
  std::size_t prefix_len = 100;
  std::size_t suffix_len = 50;
  ComparisonMode comparison = ComparisonMode::kTokenLevel;
  TruncateMode truncate = TruncateMode::kLastK;
  unsigned parallelism = 1;
  std::string run_label;
};

// Per-sample game outcome. A transport/protocol failure after retries is
// recorded as an error result (error non-empty, metrics zeroed) rather than
// dropped, so |results| always equals the benchmark size.
struct AttackResult {
  std::string sample_id;
  std::string generated_text;
  TokenSeq generated_tokens;  // first suffix_len tokens of the re-encoded text
  int em = 0;                 // the comparison mode selected by the config
  int em_token = 0;
  int em_string = 0;
  double bleu = 0.0;
  double meteor = 0.0;
  double rouge_l = 0.0;
  bool win = false;  // = (em == 1)
  bool short_generation = false;
  std::uint64_t dup_count = 0;
  DupBucket bucket = DupBucket::kD1;
  std::string error;  // empty on success
};

struct AttackRun {
  AttackConfig config;
  std::string endpoint_fingerprint;
  std::string started;
  std::string finished;
  std::vector<AttackResult> results;  // canonical order: by sample_id
  nlohmann::json manifest;
};

struct Adjudication {
  int em_token = 0;
  int em_string = 0;
  TokenSeq generated_tokens;
  bool short_generation = false;
};

// Token level: re-encode the generation, truncate to the suffix length, and
// compare element-wise. String level: the decoded true suffix must be a
// prefix of the generated text. Both verdicts are computed; the attack config
// selects which one drives the win flag.
Adjudication adjudicate(const std::string& generated_text, const AttackSample& sample,
                        Tokenizer& tok);

// Rebuilds sample token sequences for this process's tokenizer. Built-in
// providers re-encode the stored texts (whitespace token ids are process
// local; byte re-encoding must reproduce the stored ids exactly); external
// tokenizers keep the stored ids.
BenchmarkSet materialize_bench_tokens(const BenchmarkSet& bench, Tokenizer& tok);

// Adjudicates and scores one generation against its sample.
AttackResult score_generation(const AttackSample& sample, const std::string& generated_text,
                              const AttackConfig& config, Tokenizer& tok);

// Runs the extraction game over the benchmark: per sample, truncate the
// prefix to config.prefix_len, decode, request a greedy completion of
// suffix_len new tokens, adjudicate, and score all metrics. A transport
// failure on the very first request aborts (endpoint unreachable); later
// per-sample failures become error results. `only` restricts execution to the
// given sample_ids (resume support).
AttackRun run_attack(const BenchmarkSet& bench, CompletionBackend& backend,
                     const AttackConfig& config, Tokenizer& tok,
                     const std::set<std::string>* only = nullptr);

// JSONL persistence: manifest first line, then one AttackResult per line.
void save_attack_run(const AttackRun& run, const std::filesystem::path& path);
AttackRun load_attack_run(const std::filesystem::path& path,
                          bool tolerate_truncated_tail = false);

}  // namespace extractaudit
