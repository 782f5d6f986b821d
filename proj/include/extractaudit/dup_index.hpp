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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "extractaudit/corpus.hpp"
#include "extractaudit/hash.hpp"
#include "extractaudit/tokenizer.hpp"

namespace extractaudit {

// A corpus with every file tokenized once, shared by the index and the
// benchmark builders.
struct TokenizedCorpus {
  std::string tokenizer_id;
  std::uint64_t fingerprint = 0;  // corpus_fingerprint of the source
  std::vector<std::string> file_ids;
  std::vector<std::vector<TokenId>> file_tokens;

  std::span<const TokenId> window(std::uint32_t file_ordinal, std::uint32_t offset,
                                  std::size_t len) const {
    return {file_tokens[file_ordinal].data() + offset, len};
  }
};

// Tokenizer failures are rethrown with the offending file_id attached.
std::shared_ptr<const TokenizedCorpus> tokenize_corpus(const Corpus& corpus,
                                                       Tokenizer& tok);

enum class DupBucket { kD1, kD2, kD3, kDGt3 };

// bucket(c) = d1 iff c=1, d2 iff c=2, d3 iff c=3, dGt3 iff c>3.
// A count of 0 means the window is not in the corpus: caller bug.
DupBucket bucket_for_count(std::uint64_t count);
const char* bucket_name(DupBucket b);
DupBucket bucket_from_name(std::string_view name);

// Polynomial rolling hash over per-token splitmix64 mixes, mod 2^64. The base
// is fixed so indexes reproduce across machines; collisions are eliminated by
// token-level verification at lookup time, never surfaced in counts.
inline constexpr std::uint64_t kWindowHashBase = 6364136223846793005ULL;

class RollingWindowHasher {
 public:
  explicit RollingWindowHasher(std::size_t window_len);

  std::uint64_t full(std::span<const TokenId> window) const;
  // h is the hash of tokens [i, i+W); returns the hash of [i+1, i+1+W).
  std::uint64_t roll(std::uint64_t h, TokenId outgoing, TokenId incoming) const;

  std::size_t window_len() const { return window_len_; }

 private:
  std::size_t window_len_;
  std::uint64_t top_power_;  // base^(W-1)
};

struct WindowPos {
  std::uint32_t file_ordinal = 0;
  std::uint32_t offset = 0;

  friend auto operator<=>(const WindowPos&, const WindowPos&) = default;
};

// Distinct windows and window positions per duplication bucket, indexed by
// static_cast<size_t>(DupBucket).
struct BucketHistogram {
  std::array<std::uint64_t, 4> distinct{};
  std::array<std::uint64_t, 4> positions{};
};

// Exact occurrence counts of fixed-length token windows. Stores one entry per
// window position, sorted by (hash, file_ordinal, offset); lookups verify
// candidates token-by-token, so reported counts are exact.
class WindowIndex {
 public:
  // Builds over every window of every file with >= window_len tokens; shorter
  // files contribute nothing. With threads > 1 files are sharded and results
  // merged; the merged index is canonical regardless of worker count.
  static WindowIndex build(std::shared_ptr<const TokenizedCorpus> corpus,
                           std::size_t window_len, unsigned threads = 1);

  std::uint64_t count(std::span<const TokenId> window) const;
  std::vector<WindowPos> occurrences(std::span<const TokenId> window) const;

  std::size_t window_len() const { return window_len_; }
  const std::string& tokenizer_id() const { return corpus_->tokenizer_id; }
  std::uint64_t corpus_fingerprint() const { return corpus_->fingerprint; }
  std::uint64_t total_windows() const { return entries_.size(); }
  std::uint64_t distinct_windows() const;
  BucketHistogram bucket_histogram() const;
  const TokenizedCorpus& tokens() const { return *corpus_; }
  std::shared_ptr<const TokenizedCorpus> tokens_ptr() const { return corpus_; }

  // Binary persistence: magic "DUPX1", header (window_len, tokenizer_id,
  // corpus_fingerprint), then the sorted (hash, file_ordinal, offset) triples,
  // all little-endian. Loading verifies the corpus fingerprint.
  void save(const std::filesystem::path& path) const;
  static WindowIndex load(const std::filesystem::path& path,
                          std::shared_ptr<const TokenizedCorpus> corpus);

 private:
  WindowIndex() = default;

  struct Entry {
    std::uint64_t hash;
    std::uint32_t file_ordinal;
    std::uint32_t offset;
  };

  std::shared_ptr<const TokenizedCorpus> corpus_;
  std::size_t window_len_ = 0;
  std::vector<Entry> entries_;
};

// Streaming two-pass count table for corpora too large for position lists.
// Pass 1 counts window hashes; pass 2 disambiguates hashes that occur more
// than once by tracking the distinct token windows behind them, so counts are
// exact for any window actually present in the corpus. A window that is
// absent but collides with a singleton hash cannot be distinguished from that
// singleton; count() assumes queries are corpus windows.
class WindowCountTable {
 public:
  static WindowCountTable build(const TokenizedCorpus& corpus, std::size_t window_len);

  std::uint64_t count(std::span<const TokenId> window) const;

  std::size_t window_len() const { return window_len_; }
  const std::string& tokenizer_id() const { return tokenizer_id_; }
  std::uint64_t total_windows() const { return total_windows_; }
  std::uint64_t distinct_windows() const;
  BucketHistogram bucket_histogram() const;

 private:
  std::size_t window_len_ = 0;
  std::string tokenizer_id_;
  std::uint64_t total_windows_ = 0;
  std::vector<std::pair<std::uint64_t, std::uint32_t>> counts_;  // sorted by hash
  struct Variant {
    std::vector<TokenId> tokens;
    std::uint32_t count = 0;
  };
  std::map<std::uint64_t, std::vector<Variant>> variants_;  // hashes with count >= 2
};

// Spec-shaped entry points over TokenSeq (checks length + tokenizer_id).
std::uint64_t count_occurrences(const WindowIndex& index, const TokenSeq& window);

WindowIndex build_index(const Corpus& corpus, const TokenizerSpec& spec,
                        std::size_t window_len, unsigned threads = 1);

}  // namespace extractaudit
