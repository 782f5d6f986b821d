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

#include "extractaudit/dup_index.hpp"

#include <doctest.h>

#include <algorithm>

#include "extractaudit/errors.hpp"
#include "extractaudit/rng.hpp"
#include "testutil.hpp"

using namespace extractaudit;
using testutil::TempDir;

namespace {

// Corpus of token files drawn from a small alphabet so short windows repeat
// naturally.
std::shared_ptr<const TokenizedCorpus> random_token_corpus(SeededRng& rng,
                                                           std::size_t files,
                                                           std::size_t max_len,
                                                           std::uint64_t alphabet) {
  auto tc = std::make_shared<TokenizedCorpus>();
  tc->tokenizer_id = "byte";
  tc->fingerprint = rng.next();
  for (std::size_t f = 0; f < files; ++f) {
    std::vector<TokenId> toks(rng.below(max_len + 1));
    for (auto& t : toks) t = static_cast<TokenId>(rng.below(alphabet));
    tc->file_ids.push_back("f" + std::to_string(f));
    tc->file_tokens.push_back(std::move(toks));
  }
  return tc;
}

}  // namespace

TEST_CASE("bucket mapping") {
  CHECK(bucket_for_count(1) == DupBucket::kD1);
  CHECK(bucket_for_count(2) == DupBucket::kD2);
  CHECK(bucket_for_count(3) == DupBucket::kD3);
  CHECK(bucket_for_count(4) == DupBucket::kDGt3);
  CHECK(bucket_for_count(5) == DupBucket::kDGt3);
  CHECK_THROWS_AS(bucket_for_count(0), UsageError);
}

TEST_CASE("rolling hash matches full recomputation") {
  SeededRng rng(7);
  const RollingWindowHasher hasher(8);
  std::vector<TokenId> toks(64);
  for (auto& t : toks) t = static_cast<TokenId>(rng.below(1000));
  std::uint64_t h = hasher.full({toks.data(), 8});
  for (std::size_t off = 1; off + 8 <= toks.size(); ++off) {
    h = hasher.roll(h, toks[off - 1], toks[off + 7]);
    CHECK(h == hasher.full({toks.data() + off, 8}));
  }
}

TEST_CASE("single file of exactly window length yields one window") {
  TempDir dir;
  const auto planted = testutil::make_planted_corpus(dir, 1, {{1, 1}}, 300);
  auto tok = make_tokenizer(TokenizerSpec::byte());
  auto tc = tokenize_corpus(planted.corpus, *tok);
  const WindowIndex index = WindowIndex::build(tc, 300);
  CHECK(index.total_windows() == 1);
}

TEST_CASE("files shorter than the window contribute nothing") {
  TempDir dir;
  const auto planted = testutil::make_planted_corpus(dir, 2, {{1, 1}}, 299);
  auto tok = make_tokenizer(TokenizerSpec::byte());
  auto tc = tokenize_corpus(planted.corpus, *tok);
  const WindowIndex index = WindowIndex::build(tc, 300);
  CHECK(index.total_windows() == 0);
}

TEST_CASE("planted block in two files counts twice") {
  TempDir dir;
  const auto planted = testutil::make_planted_corpus(dir, 3, {{1, 2}, {4, 1}}, 300);
  auto tok = make_tokenizer(TokenizerSpec::byte());
  auto tc = tokenize_corpus(planted.corpus, *tok);
  const WindowIndex index = WindowIndex::build(tc, 300);
  const TokenSeq block = tok->encode(planted.block_texts[0]);
  CHECK(count_occurrences(index, block) == 2);
  CHECK(testutil::naive_count(*tc, block.span()) == 2);
  // Absent window.
  SeededRng rng(5);
  const TokenSeq absent = tok->encode(testutil::random_alnum(rng, 300));
  CHECK(count_occurrences(index, absent) == 0);
  // Present exactly once.
  const TokenSeq once = tok->encode(planted.block_texts[1]);
  CHECK(count_occurrences(index, once) == 1);
}

TEST_CASE("counts equal the naive scan on randomized corpora") {
  SeededRng rng(20);
  for (int round = 0; round < 12; ++round) {
    const std::size_t window_len = 2 + rng.below(12);
    auto tc = random_token_corpus(rng, 3 + rng.below(6), 400, 4);
    const WindowIndex index = WindowIndex::build(tc, window_len);
    const WindowCountTable table = WindowCountTable::build(*tc, window_len);
    for (int q = 0; q < 25; ++q) {
      std::vector<TokenId> w(window_len);
      if (q % 2 == 0 && index.total_windows() > 0) {
        // A window actually present in the corpus.
        std::size_t f;
        do {
          f = rng.below(tc->file_tokens.size());
        } while (tc->file_tokens[f].size() < window_len);
        const std::size_t off = rng.below(tc->file_tokens[f].size() - window_len + 1);
        std::copy_n(tc->file_tokens[f].begin() + static_cast<std::ptrdiff_t>(off),
                    window_len, w.begin());
      } else {
        for (auto& t : w) t = static_cast<TokenId>(rng.below(4));
      }
      const std::uint64_t expected = testutil::naive_count(*tc, w);
      CHECK(index.count(w) == expected);
      if (expected > 0) CHECK(table.count(w) == expected);
    }
  }
}

TEST_CASE("completeness: counts sum to the number of window positions") {
  SeededRng rng(21);
  auto tc = random_token_corpus(rng, 6, 300, 3);
  const std::size_t window_len = 5;
  const WindowIndex index = WindowIndex::build(tc, window_len);
  std::uint64_t expected_positions = 0;
  for (const auto& toks : tc->file_tokens) {
    if (toks.size() >= window_len) expected_positions += toks.size() - window_len + 1;
  }
  CHECK(index.total_windows() == expected_positions);
  const BucketHistogram hist = index.bucket_histogram();
  CHECK(hist.positions[0] + hist.positions[1] + hist.positions[2] + hist.positions[3] ==
        expected_positions);
  const WindowCountTable table = WindowCountTable::build(*tc, window_len);
  CHECK(table.total_windows() == expected_positions);
  CHECK(table.distinct_windows() == index.distinct_windows());
}

TEST_CASE("parallel build is canonical") {
  SeededRng rng(22);
  auto tc = random_token_corpus(rng, 24, 500, 4);
  const WindowIndex a = WindowIndex::build(tc, 6, 1);
  const WindowIndex b = WindowIndex::build(tc, 6, 4);
  const WindowIndex c = WindowIndex::build(tc, 6, 13);
  TempDir dir;
  a.save(dir.file("a.dupx"));
  b.save(dir.file("b.dupx"));
  c.save(dir.file("c.dupx"));
  CHECK(read_file(dir.file("a.dupx")) == read_file(dir.file("b.dupx")));
  CHECK(read_file(dir.file("a.dupx")) == read_file(dir.file("c.dupx")));
}

TEST_CASE("index persistence round trips and verifies the corpus fingerprint") {
  TempDir dir;
  const auto planted = testutil::make_planted_corpus(dir, 4, {{3, 2}}, 300);
  auto tok = make_tokenizer(TokenizerSpec::byte());
  auto tc = tokenize_corpus(planted.corpus, *tok);
  const WindowIndex index = WindowIndex::build(tc, 300);
  index.save(dir.file("idx.dupx"));

  const WindowIndex loaded = WindowIndex::load(dir.file("idx.dupx"), tc);
  const TokenSeq block = tok->encode(planted.block_texts[0]);
  CHECK(count_occurrences(loaded, block) == 2);
  CHECK(loaded.window_len() == 300);

  // A different corpus must be rejected.
  const auto other = testutil::make_planted_corpus(dir, 5, {{3, 2}}, 300, "other.jsonl");
  auto other_tc = tokenize_corpus(other.corpus, *tok);
  CHECK_THROWS_AS(WindowIndex::load(dir.file("idx.dupx"), other_tc), Error);
}

TEST_CASE("lookups reject length and tokenizer mismatches") {
  TempDir dir;
  const auto planted = testutil::make_planted_corpus(dir, 6, {{2, 1}}, 300);
  auto tok = make_tokenizer(TokenizerSpec::byte());
  auto tc = tokenize_corpus(planted.corpus, *tok);
  const WindowIndex index = WindowIndex::build(tc, 300);
  const TokenSeq wrong_len = tok->encode(planted.block_texts[0].substr(0, 299));
  CHECK_THROWS_AS(count_occurrences(index, wrong_len), UsageError);
  auto ws = make_tokenizer(TokenizerSpec::whitespace());
  TokenSeq wrong_tok = ws->encode("a b c");
  wrong_tok.ids.resize(300, 0);
  CHECK_THROWS_AS(count_occurrences(index, wrong_tok), UsageError);
}

TEST_CASE("tokenizer failure propagates with file context") {
  TempDir dir;
  testutil::write_text(dir.file("c.jsonl"), "{\"id\":\"only.java\",\"content\":\"x y\"}\n");
  const Corpus corpus = load_corpus(dir.file("c.jsonl"), CorpusFormat::kJsonl);
  ExternalTokenizerOptions opts;
  opts.timeout_ms = 100;
  opts.max_retries = 0;
  opts.backoff_base_ms = 1;
  auto tok = make_tokenizer(TokenizerSpec::external("http://127.0.0.1:9", "t"), opts);
  try {
    tokenize_corpus(corpus, *tok);
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("only.java") != std::string::npos);
  }
}
