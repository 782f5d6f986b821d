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
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "extractaudit/dup_index.hpp"
#include "extractaudit/tokenizer.hpp"

namespace extractaudit {

// One challenge of the extraction game: a span of span_len source tokens
// split into a prompt prefix and a ground-truth suffix. prefix || suffix
// always equals the source file's tokens at [token_offset, token_offset +
// span_len).
struct AttackSample {
  std::string sample_id;
  std::string file_id;
  std::uint64_t token_offset = 0;
  TokenSeq prefix;
  TokenSeq suffix;
  std::string prefix_text;
  std::string suffix_text;
  std::uint64_t dup_count = 0;
  DupBucket bucket = DupBucket::kD1;
  std::size_t prefix_len_effective = 0;

  TokenSeq full_tokens() const { return concat(prefix, suffix); }
};

enum class BenchKind { kPretrainAttack, kFinetuneAttack };
const char* bench_kind_name(BenchKind k);
BenchKind bench_kind_from_name(std::string_view name);

struct BenchmarkSet {
  BenchKind kind = BenchKind::kPretrainAttack;
  std::uint64_t seed = 0;
  std::vector<AttackSample> samples;
  nlohmann::json manifest;  // full build config; first line of the JSONL file
};

struct PretrainBuildConfig {
  std::size_t span_len = 300;
  std::size_t suffix_len = 50;
  std::uint64_t n = 1000;
  std::uint64_t min_dup_count = 4;  // "more than three duplicates"
  std::size_t max_passes = 64;
  std::uint64_t seed = 0;
};

// Draws one uniform random span per eligible file per pass (files shorter
// than span_len are skipped), keeps candidates with dup_count >=
// min_dup_count that do not occur in `exclude`, and repeats passes until the
// pool holds n candidates; then samples exactly n without replacement.
// Fewer than n eligible candidates raises UnderfillError with per-reason
// counts; the output is never silently padded or reduced.
BenchmarkSet build_pretrain_bench(const WindowIndex& index, const WindowIndex* exclude,
                                  const PretrainBuildConfig& config, Tokenizer& tok);

struct FinetuneBuildConfig {
  std::size_t span_len = 300;
  std::size_t suffix_len = 50;
  std::size_t stride = 50;  // sliding-window stride; one suffix length
  std::uint64_t n_per_bucket = 1000;
  std::uint64_t seed = 0;
};

// Enumerates candidate windows at offsets 0, stride, 2*stride, ... of every
// file, buckets them by duplication count, and draws n_per_bucket samples per
// bucket subject to suffix uniqueness: no two selected samples share a suffix
// token sequence, and a candidate whose suffix occurs anywhere in the corpus
// preceded by a different full-length prefix is ineligible.
std::map<DupBucket, BenchmarkSet> build_finetune_bench(const WindowIndex& index,
                                                       const FinetuneBuildConfig& config,
                                                       Tokenizer& tok);

enum class TruncateMode { kLastK, kFirstK };
const char* truncate_mode_name(TruncateMode m);

// Shortens the prefix to k tokens. kLastK keeps the tokens adjacent to the
// suffix so that prefix || suffix stays contiguous in the source; kFirstK is
// available for sensitivity checks only and breaks that contiguity.
AttackSample truncate_prefix(const AttackSample& sample, std::size_t k, Tokenizer& tok,
                             TruncateMode mode = TruncateMode::kLastK);

// JSONL persistence: a manifest record on the first line, then one sample per
// line with fields sample_id, file_id, token_offset, prefix_tokens,
// suffix_tokens, prefix_text, suffix_text, dup_count, bucket,
// prefix_len_effective.
void save_benchmark(const BenchmarkSet& bench, const std::filesystem::path& path);
BenchmarkSet load_benchmark(const std::filesystem::path& path);

}  // namespace extractaudit
