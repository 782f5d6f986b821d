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

#include "extractaudit/bench.hpp"

#include <doctest.h>

#include <set>

#include "extractaudit/errors.hpp"
#include "testutil.hpp"

using namespace extractaudit;
using testutil::TempDir;

namespace {

struct BuiltIndex {
  std::shared_ptr<const TokenizedCorpus> tokens;
  std::unique_ptr<WindowIndex> index;
  std::unique_ptr<Tokenizer> tok;
};

BuiltIndex index_over(const Corpus& corpus, std::size_t window_len) {
  BuiltIndex out;
  out.tok = make_tokenizer(TokenizerSpec::byte());
  out.tokens = tokenize_corpus(corpus, *out.tok);
  out.index = std::make_unique<WindowIndex>(WindowIndex::build(out.tokens, window_len));
  return out;
}

// Re-verifies every sample against its source file via an independent token
// comparison.
void verify_against_source(const BenchmarkSet& bench, const TokenizedCorpus& tc) {
  for (const AttackSample& s : bench.samples) {
    std::size_t file_ordinal = tc.file_ids.size();
    for (std::size_t f = 0; f < tc.file_ids.size(); ++f) {
      if (tc.file_ids[f] == s.file_id) {
        file_ordinal = f;
        break;
      }
    }
    REQUIRE(file_ordinal < tc.file_ids.size());
    const TokenSeq full = s.full_tokens();
    REQUIRE(s.token_offset + full.size() <= tc.file_tokens[file_ordinal].size());
    for (std::size_t k = 0; k < full.size(); ++k) {
      REQUIRE(tc.file_tokens[file_ordinal][s.token_offset + k] == full.ids[k]);
    }
  }
}

}  // namespace

TEST_CASE("pretrain build underfills on an all-unique corpus") {
  TempDir dir;
  const auto planted = testutil::make_planted_corpus(dir, 40, {{10, 1}}, 300);
  auto built = index_over(planted.corpus, 300);
  PretrainBuildConfig config;
  config.n = 5;
  try {
    build_pretrain_bench(*built.index, nullptr, config, *built.tok);
    FAIL("expected UnderfillError");
  } catch (const UnderfillError& e) {
    CHECK(e.requested() == 5);
    CHECK(e.available() == 0);
    CHECK(e.reasons().at("rejected_dup_below_threshold") > 0);
  }
}

TEST_CASE("pretrain build selects only dup>3 samples and verifies against source") {
  TempDir dir;
  // 60 distinct blocks, 4 copies each -> every window has dup_count 4.
  const auto planted = testutil::make_planted_corpus(dir, 41, {{60, 4}}, 300);
  auto built = index_over(planted.corpus, 300);
  PretrainBuildConfig config;
  config.n = 50;
  config.seed = 9;
  const BenchmarkSet bench = build_pretrain_bench(*built.index, nullptr, config, *built.tok);
  CHECK(bench.samples.size() == 50);
  std::set<std::string> ids;
  for (const AttackSample& s : bench.samples) {
    CHECK(s.bucket == DupBucket::kDGt3);
    CHECK(s.dup_count == 4);
    CHECK(s.prefix.size() == 250);
    CHECK(s.suffix.size() == 50);
    CHECK(concat(s.prefix, s.suffix).ids == s.full_tokens().ids);
    CHECK(ids.insert(s.sample_id).second);
    // Independent duplication check.
    CHECK(testutil::naive_count(*built.tokens, s.full_tokens().span()) == 4);
  }
  verify_against_source(bench, *built.tokens);
}

TEST_CASE("pretrain build is deterministic per seed") {
  TempDir dir;
  const auto planted = testutil::make_planted_corpus(dir, 42, {{30, 4}}, 300);
  auto built = index_over(planted.corpus, 300);
  PretrainBuildConfig config;
  config.n = 20;
  config.seed = 123;
  const BenchmarkSet a = build_pretrain_bench(*built.index, nullptr, config, *built.tok);
  const BenchmarkSet b = build_pretrain_bench(*built.index, nullptr, config, *built.tok);
  TempDir out;
  save_benchmark(a, out.file("a.jsonl"));
  save_benchmark(b, out.file("b.jsonl"));
  CHECK(read_file(out.file("a.jsonl")) == read_file(out.file("b.jsonl")));

  config.seed = 124;
  const BenchmarkSet c = build_pretrain_bench(*built.index, nullptr, config, *built.tok);
  save_benchmark(c, out.file("c.jsonl"));
  CHECK(read_file(out.file("a.jsonl")) != read_file(out.file("c.jsonl")));
}

TEST_CASE("pretrain exclusion drops windows from the exclude corpus") {
  TempDir dir;
  // Half of the blocks also appear in the exclude corpus.
  SeededRng rng(43);
  std::vector<std::string> shared;
  for (int i = 0; i < 20; ++i) shared.push_back(testutil::random_alnum(rng, 300));
  std::vector<std::string> own;
  for (int i = 0; i < 20; ++i) own.push_back(testutil::random_alnum(rng, 300));

  std::ostringstream main_jsonl, exclude_jsonl;
  int file_no = 0;
  for (const auto& text : shared) {
    for (int c = 0; c < 4; ++c) {
      main_jsonl << nlohmann::json{{"id", "m" + std::to_string(file_no++)},
                                   {"content", text}}
                        .dump()
                 << '\n';
    }
    exclude_jsonl << nlohmann::json{{"id", "e" + std::to_string(file_no++)},
                                    {"content", text}}
                         .dump()
                  << '\n';
  }
  for (const auto& text : own) {
    for (int c = 0; c < 4; ++c) {
      main_jsonl << nlohmann::json{{"id", "m" + std::to_string(file_no++)},
                                   {"content", text}}
                        .dump()
                 << '\n';
    }
  }
  testutil::write_text(dir.file("main.jsonl"), main_jsonl.str());
  testutil::write_text(dir.file("exclude.jsonl"), exclude_jsonl.str());

  const Corpus main_corpus = load_corpus(dir.file("main.jsonl"), CorpusFormat::kJsonl);
  const Corpus exclude_corpus = load_corpus(dir.file("exclude.jsonl"), CorpusFormat::kJsonl);
  auto built = index_over(main_corpus, 300);
  auto exclude_tc = tokenize_corpus(exclude_corpus, *built.tok);
  const WindowIndex exclude = WindowIndex::build(exclude_tc, 300);

  PretrainBuildConfig config;
  config.n = 20;
  config.seed = 5;
  const BenchmarkSet bench = build_pretrain_bench(*built.index, &exclude, config, *built.tok);
  CHECK(bench.samples.size() == 20);
  for (const AttackSample& s : bench.samples) {
    // Independent scan: no selected window may occur in the exclude corpus.
    CHECK(testutil::naive_count(*exclude_tc, s.full_tokens().span()) == 0);
  }
  // Requesting more than the surviving 20 blocks can supply must underfill.
  config.n = 21;
  CHECK_THROWS_AS(build_pretrain_bench(*built.index, &exclude, config, *built.tok),
                  UnderfillError);
}

TEST_CASE("finetune sliding window: a 300-token file yields one candidate at offset 0") {
  TempDir dir;
  const auto planted = testutil::make_planted_corpus(dir, 44, {{3, 1}}, 300);
  auto built = index_over(planted.corpus, 300);
  FinetuneBuildConfig config;
  config.n_per_bucket = 3;
  config.stride = 7;
  try {
    build_finetune_bench(*built.index, config, *built.tok);
    FAIL("expected UnderfillError (only d1 candidates exist)");
  } catch (const UnderfillError& e) {
    // d1 has 3 eligible candidates; the other buckets are empty.
    CHECK(e.reasons().at("bucket_d2_eligible") == 0);
    CHECK(e.reasons().at("bucket_d3_eligible") == 0);
    CHECK(e.reasons().at("bucket_dGt3_eligible") == 0);
    CHECK(e.reasons().count("bucket_d1_eligible") == 0);  // d1 was satisfied
    CHECK(e.reasons().at("candidates_enumerated") == 3);
  }
  config.n_per_bucket = 1;
  // Still underfills: d2/d3/dGt3 empty. Build per-bucket corpus instead below.
}

TEST_CASE("finetune buckets split by duplication count") {
  TempDir dir;
  // Block A appears twice, block B once.
  SeededRng rng(45);
  const std::string a_text = testutil::random_alnum(rng, 300);
  const std::string b_text = testutil::random_alnum(rng, 300);
  std::ostringstream jsonl;
  jsonl << nlohmann::json{{"id", "a1"}, {"content", a_text}}.dump() << '\n';
  jsonl << nlohmann::json{{"id", "a2"}, {"content", a_text}}.dump() << '\n';
  jsonl << nlohmann::json{{"id", "b1"}, {"content", b_text}}.dump() << '\n';
  testutil::write_text(dir.file("c.jsonl"), jsonl.str());
  const Corpus corpus = load_corpus(dir.file("c.jsonl"), CorpusFormat::kJsonl);
  auto built = index_over(corpus, 300);
  FinetuneBuildConfig config;
  config.n_per_bucket = 1;
  config.seed = 3;
  try {
    build_finetune_bench(*built.index, config, *built.tok);
    FAIL("expected UnderfillError (d3 and dGt3 are empty)");
  } catch (const UnderfillError& e) {
    CHECK(e.reasons().count("bucket_d1_eligible") == 0);  // b is a d1 candidate
    CHECK(e.reasons().count("bucket_d2_eligible") == 0);  // a is a d2 candidate
    CHECK(e.reasons().at("bucket_d3_eligible") == 0);
    CHECK(e.reasons().at("bucket_dGt3_eligible") == 0);
  }
}

TEST_CASE("finetune build fills all four buckets with suffix-unique samples") {
  TempDir dir;
  const auto planted = testutil::make_planted_corpus(
      dir, 46, {{8, 1}, {8, 2}, {8, 3}, {8, 4}}, 300);
  auto built = index_over(planted.corpus, 300);
  FinetuneBuildConfig config;
  config.n_per_bucket = 6;
  config.seed = 17;
  const auto sets = build_finetune_bench(*built.index, config, *built.tok);
  REQUIRE(sets.size() == 4);
  const std::map<DupBucket, std::uint64_t> expected_dup = {{DupBucket::kD1, 1},
                                                           {DupBucket::kD2, 2},
                                                           {DupBucket::kD3, 3},
                                                           {DupBucket::kDGt3, 4}};
  for (const auto& [bucket, bench] : sets) {
    CHECK(bench.samples.size() == 6);
    std::set<std::vector<TokenId>> suffixes;
    for (const AttackSample& s : bench.samples) {
      CHECK(s.bucket == bucket);
      CHECK(s.dup_count == expected_dup.at(bucket));
      // Suffix uniqueness within the set.
      CHECK(suffixes.insert(s.suffix.ids).second);
      // Corpus-level: every occurrence of the suffix with a full prefix in
      // front carries the same prefix (independent scan).
      for (std::size_t f = 0; f < built.tokens->file_tokens.size(); ++f) {
        const auto& toks = built.tokens->file_tokens[f];
        if (toks.size() < 50) continue;
        for (std::size_t off = 0; off + 50 <= toks.size(); ++off) {
          if (!std::equal(s.suffix.ids.begin(), s.suffix.ids.end(), toks.begin() + off)) {
            continue;
          }
          if (off < 250) continue;
          for (std::size_t k = 0; k < 250; ++k) {
            REQUIRE(toks[off - 250 + k] == s.prefix.ids[k]);
          }
        }
      }
    }
    verify_against_source(bench, *built.tokens);
  }
}

TEST_CASE("finetune build rejects candidates whose suffix has an alternate prefix") {
  TempDir dir;
  SeededRng rng(47);
  // Two files share the same 50-token tail behind different prefixes; both
  // tail candidates must be rejected.
  const std::string tail = testutil::random_alnum(rng, 50);
  const std::string p1 = testutil::random_alnum(rng, 250);
  const std::string p2 = testutil::random_alnum(rng, 250);
  std::ostringstream jsonl;
  jsonl << nlohmann::json{{"id", "x1"}, {"content", p1 + tail}}.dump() << '\n';
  jsonl << nlohmann::json{{"id", "x2"}, {"content", p2 + tail}}.dump() << '\n';
  testutil::write_text(dir.file("c.jsonl"), jsonl.str());
  const Corpus corpus = load_corpus(dir.file("c.jsonl"), CorpusFormat::kJsonl);
  auto built = index_over(corpus, 300);
  FinetuneBuildConfig config;
  config.n_per_bucket = 1;
  config.seed = 1;
  try {
    build_finetune_bench(*built.index, config, *built.tok);
    FAIL("expected UnderfillError");
  } catch (const UnderfillError& e) {
    CHECK(e.reasons().at("rejected_alternate_prefix") == 2);
    CHECK(e.reasons().at("bucket_d1_eligible") == 0);
  }
}

TEST_CASE("finetune stride must be positive") {
  TempDir dir;
  const auto planted = testutil::make_planted_corpus(dir, 48, {{2, 1}}, 300);
  auto built = index_over(planted.corpus, 300);
  FinetuneBuildConfig config;
  config.stride = 0;
  CHECK_THROWS_AS(build_finetune_bench(*built.index, config, *built.tok), UsageError);
}

TEST_CASE("truncate_prefix keeps the suffix-adjacent tokens") {
  TempDir dir;
  const auto planted = testutil::make_planted_corpus(dir, 49, {{4, 4}}, 300);
  auto built = index_over(planted.corpus, 300);
  PretrainBuildConfig config;
  config.n = 2;
  const BenchmarkSet bench = build_pretrain_bench(*built.index, nullptr, config, *built.tok);
  const AttackSample& s = bench.samples[0];

  const AttackSample same = truncate_prefix(s, 250, *built.tok);
  CHECK(same.prefix.ids == s.prefix.ids);
  CHECK(same.prefix_text == s.prefix_text);
  CHECK(same.prefix_len_effective == 250);

  const AttackSample k100 = truncate_prefix(s, 100, *built.tok);
  CHECK(k100.prefix.size() == 100);
  CHECK(k100.prefix_len_effective == 100);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(k100.prefix.ids[i] == s.prefix.ids[150 + i]);
  }
  CHECK(k100.suffix.ids == s.suffix.ids);

  // Byte tokenizer: decode(truncated prefix || suffix) is a substring of the
  // source file content.
  const std::string text = built.tok->decode(concat(k100.prefix, k100.suffix));
  bool found = false;
  for (const SourceFile& f : planted.corpus.files) {
    if (f.file_id == s.file_id) {
      found = f.content.find(text) != std::string::npos;
    }
  }
  CHECK(found);

  // first-k mode keeps the far tokens instead.
  const AttackSample first100 = truncate_prefix(s, 100, *built.tok, TruncateMode::kFirstK);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(first100.prefix.ids[i] == s.prefix.ids[i]);
  }

  CHECK_THROWS_AS(truncate_prefix(s, 251, *built.tok), UsageError);
}

TEST_CASE("benchmark persistence round trips") {
  TempDir dir;
  const auto planted = testutil::make_planted_corpus(dir, 50, {{6, 4}}, 300);
  auto built = index_over(planted.corpus, 300);
  PretrainBuildConfig config;
  config.n = 5;
  config.seed = 2;
  const BenchmarkSet bench = build_pretrain_bench(*built.index, nullptr, config, *built.tok);
  save_benchmark(bench, dir.file("bench.jsonl"));
  const BenchmarkSet loaded = load_benchmark(dir.file("bench.jsonl"));
  REQUIRE(loaded.samples.size() == bench.samples.size());
  CHECK(loaded.kind == bench.kind);
  CHECK(loaded.seed == bench.seed);
  for (std::size_t i = 0; i < bench.samples.size(); ++i) {
    CHECK(loaded.samples[i].sample_id == bench.samples[i].sample_id);
    CHECK(loaded.samples[i].prefix.ids == bench.samples[i].prefix.ids);
    CHECK(loaded.samples[i].suffix.ids == bench.samples[i].suffix.ids);
    CHECK(loaded.samples[i].dup_count == bench.samples[i].dup_count);
    CHECK(loaded.samples[i].bucket == bench.samples[i].bucket);
  }
  // Saving the loaded set reproduces the file byte for byte.
  save_benchmark(loaded, dir.file("bench2.jsonl"));
  CHECK(read_file(dir.file("bench.jsonl")) == read_file(dir.file("bench2.jsonl")));
}
