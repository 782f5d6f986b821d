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

#include <algorithm>
#include <cstring>
#include <fstream>
#include <thread>

#include "extractaudit/errors.hpp"

namespace extractaudit {

std::shared_ptr<const TokenizedCorpus> tokenize_corpus(const Corpus& corpus,
                                                       Tokenizer& tok) {
  auto out = std::make_shared<TokenizedCorpus>();
  out->tokenizer_id = tok.id();
  out->fingerprint = corpus_fingerprint(corpus);
  out->file_ids.reserve(corpus.files.size());
  out->file_tokens.reserve(corpus.files.size());
  for (const SourceFile& f : corpus.files) {
    try {
      out->file_tokens.push_back(tok.encode(f.content).ids);
    } catch (const Error& e) {
      throw Error("tokenizing " + f.file_id + ": " + e.what());
    }
    out->file_ids.push_back(f.file_id);
  }
  return out;
}

DupBucket bucket_for_count(std::uint64_t count) {
  if (count == 0) {
    throw UsageError("duplication count 0: window is not in the corpus");
  }
  if (count == 1) return DupBucket::kD1;
  if (count == 2) return DupBucket::kD2;
  if (count == 3) return DupBucket::kD3;
  return DupBucket::kDGt3;
}

const char* bucket_name(DupBucket b) {
  switch (b) {
    case DupBucket::kD1:
      return "d1";
    case DupBucket::kD2:
      return "d2";
    case DupBucket::kD3:
      return "d3";
    case DupBucket::kDGt3:
      return "dGt3";
  }
  return "?";
}

DupBucket bucket_from_name(std::string_view name) {
  if (name == "d1") return DupBucket::kD1;
  if (name == "d2") return DupBucket::kD2;
  if (name == "d3") return DupBucket::kD3;
  if (name == "dGt3") return DupBucket::kDGt3;
  throw UsageError("unknown duplication bucket: " + std::string(name));
}

RollingWindowHasher::RollingWindowHasher(std::size_t window_len)
    : window_len_(window_len) {
  if (window_len == 0) throw UsageError("window length must be >= 1");
  top_power_ = 1;
  for (std::size_t i = 1; i < window_len; ++i) top_power_ *= kWindowHashBase;
}

std::uint64_t RollingWindowHasher::full(std::span<const TokenId> window) const {
  std::uint64_t h = 0;
  for (TokenId t : window) h = h * kWindowHashBase + splitmix64(t);
  return h;
}

std::uint64_t RollingWindowHasher::roll(std::uint64_t h, TokenId outgoing,
                                        TokenId incoming) const {
  return (h - splitmix64(outgoing) * top_power_) * kWindowHashBase + splitmix64(incoming);
}

namespace {

// Appends one entry per window of every file in [first, last).
template <typename Push>
void scan_windows(const TokenizedCorpus& corpus, const RollingWindowHasher& hasher,
                  std::size_t first, std::size_t last, Push&& push) {
  const std::size_t w = hasher.window_len();
  for (std::size_t f = first; f < last; ++f) {
    const auto& toks = corpus.file_tokens[f];
    if (toks.size() < w) continue;
    std::uint64_t h = hasher.full({toks.data(), w});
    push(h, static_cast<std::uint32_t>(f), 0u);
    for (std::size_t off = 1; off + w <= toks.size(); ++off) {
      h = hasher.roll(h, toks[off - 1], toks[off + w - 1]);
      push(h, static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(off));
    }
  }
}

}  // namespace

WindowIndex WindowIndex::build(std::shared_ptr<const TokenizedCorpus> corpus,
                               std::size_t window_len, unsigned threads) {
  if (!corpus) throw UsageError("WindowIndex::build: null corpus");
  WindowIndex idx;
  idx.corpus_ = std::move(corpus);
  idx.window_len_ = window_len;
  const RollingWindowHasher hasher(window_len);
  const TokenizedCorpus& tc = *idx.corpus_;

  std::size_t total = 0;
  for (const auto& toks : tc.file_tokens) {
    if (toks.size() >= window_len) total += toks.size() - window_len + 1;
  }
  idx.entries_.reserve(total);

  if (threads <= 1 || tc.file_tokens.size() < 2) {
    scan_windows(tc, hasher, 0, tc.file_tokens.size(),
                 [&](std::uint64_t h, std::uint32_t f, std::uint32_t off) {
                   idx.entries_.push_back({h, f, off});
                 });
  } else {
    const unsigned workers =
        std::min<unsigned>(threads, static_cast<unsigned>(tc.file_tokens.size()));
    std::vector<std::vector<Entry>> shards(workers);
    std::vector<std::thread> pool;
    const std::size_t per = (tc.file_tokens.size() + workers - 1) / workers;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        const std::size_t first = t * per;
        const std::size_t last = std::min(first + per, tc.file_tokens.size());
        scan_windows(tc, hasher, first, last,
                     [&](std::uint64_t h, std::uint32_t f, std::uint32_t off) {
                       shards[t].push_back({h, f, off});
                     });
      });
    }
    for (auto& th : pool) th.join();
    for (auto& shard : shards) {
      idx.entries_.insert(idx.entries_.end(), shard.begin(), shard.end());
    }
  }

  std::sort(idx.entries_.begin(), idx.entries_.end(), [](const Entry& a, const Entry& b) {
    if (a.hash != b.hash) return a.hash < b.hash;
    if (a.file_ordinal != b.file_ordinal) return a.file_ordinal < b.file_ordinal;
    return a.offset < b.offset;
  });
  return idx;
}

std::uint64_t WindowIndex::count(std::span<const TokenId> window) const {
  return occurrences(window).size();
}

std::vector<WindowPos> WindowIndex::occurrences(std::span<const TokenId> window) const {
  if (window.size() != window_len_) {
    throw UsageError("window length " + std::to_string(window.size()) +
                     " does not match index window length " + std::to_string(window_len_));
  }
  const RollingWindowHasher hasher(window_len_);
  const std::uint64_t h = hasher.full(window);
  auto lo = std::lower_bound(entries_.begin(), entries_.end(), h,
                             [](const Entry& e, std::uint64_t v) { return e.hash < v; });
  std::vector<WindowPos> out;
  for (; lo != entries_.end() && lo->hash == h; ++lo) {
    const auto candidate = corpus_->window(lo->file_ordinal, lo->offset, window_len_);
    if (std::equal(window.begin(), window.end(), candidate.begin())) {
      out.push_back({lo->file_ordinal, lo->offset});
    }
  }
  return out;
}

BucketHistogram WindowIndex::bucket_histogram() const {
  // Entries with equal hashes are adjacent; hash collisions between distinct
  // windows are resolved by comparing tokens.
  BucketHistogram hist;
  std::size_t i = 0;
  while (i < entries_.size()) {
    std::size_t j = i;
    while (j < entries_.size() && entries_[j].hash == entries_[i].hash) ++j;
    std::vector<std::pair<std::size_t, std::uint64_t>> reps;  // (entry, count)
    for (std::size_t k = i; k < j; ++k) {
      bool found = false;
      const auto wk = corpus_->window(entries_[k].file_ordinal, entries_[k].offset,
                                      window_len_);
      for (auto& [r, count] : reps) {
        const auto wr = corpus_->window(entries_[r].file_ordinal, entries_[r].offset,
                                        window_len_);
        if (std::equal(wk.begin(), wk.end(), wr.begin())) {
          found = true;
          ++count;
          break;
        }
      }
      if (!found) reps.emplace_back(k, 1);
    }
    for (const auto& [r, count] : reps) {
      const auto b = static_cast<std::size_t>(bucket_for_count(count));
      hist.distinct[b] += 1;
      hist.positions[b] += count;
    }
    i = j;
  }
  return hist;
}

std::uint64_t WindowIndex::distinct_windows() const {
  const BucketHistogram hist = bucket_histogram();
  return hist.distinct[0] + hist.distinct[1] + hist.distinct[2] + hist.distinct[3];
}

namespace {

constexpr char kIndexMagic[5] = {'D', 'U', 'P', 'X', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in.at(pos++))) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::string& in, std::size_t& pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in.at(pos++))) << (8 * i);
  return v;
}

}  // namespace

void WindowIndex::save(const std::filesystem::path& path) const {
  std::string out;
  out.reserve(32 + tokenizer_id().size() + entries_.size() * 16);
  out.append(kIndexMagic, sizeof(kIndexMagic));
  put_u32(out, static_cast<std::uint32_t>(window_len_));
  put_u64(out, corpus_fingerprint());
  put_u32(out, static_cast<std::uint32_t>(tokenizer_id().size()));
  out.append(tokenizer_id());
  put_u64(out, entries_.size());
  for (const Entry& e : entries_) {
    put_u64(out, e.hash);
    put_u32(out, e.file_ordinal);
    put_u32(out, e.offset);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("short write to " + path.string());
}

WindowIndex WindowIndex::load(const std::filesystem::path& path,
                              std::shared_ptr<const TokenizedCorpus> corpus) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  if (in.size() < sizeof(kIndexMagic) ||
      std::memcmp(in.data(), kIndexMagic, sizeof(kIndexMagic)) != 0) {
    throw FormatError("not a DUPX1 index: " + path.string());
  }
  pos = sizeof(kIndexMagic);
  WindowIndex idx;
  idx.window_len_ = get_u32(in, pos);
  const std::uint64_t fingerprint = get_u64(in, pos);
  const std::uint32_t id_len = get_u32(in, pos);
  const std::string tokenizer_id = in.substr(pos, id_len);
  pos += id_len;
  if (!corpus) throw UsageError("WindowIndex::load: null corpus");
  if (fingerprint != corpus->fingerprint) {
    throw Error("index " + path.string() + " was built over a different corpus (" +
                hex64(fingerprint) + " vs " + hex64(corpus->fingerprint) + ")");
  }
  if (tokenizer_id != corpus->tokenizer_id) {
    throw Error("index " + path.string() + " was built with tokenizer '" + tokenizer_id +
                "', corpus tokenized with '" + corpus->tokenizer_id + "'");
  }
  idx.corpus_ = std::move(corpus);
  const std::uint64_t count = get_u64(in, pos);
  idx.entries_.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Entry e{};
    e.hash = get_u64(in, pos);
    e.file_ordinal = get_u32(in, pos);
    e.offset = get_u32(in, pos);
    idx.entries_.push_back(e);
  }
  return idx;
}

WindowCountTable WindowCountTable::build(const TokenizedCorpus& corpus,
                                         std::size_t window_len) {
  WindowCountTable table;
  table.window_len_ = window_len;
  table.tokenizer_id_ = corpus.tokenizer_id;
  const RollingWindowHasher hasher(window_len);

  // Pass 1: hash every window, sort, run-length encode.
  std::vector<std::uint64_t> hashes;
  scan_windows(corpus, hasher, 0, corpus.file_tokens.size(),
               [&](std::uint64_t h, std::uint32_t, std::uint32_t) { hashes.push_back(h); });
  table.total_windows_ = hashes.size();
  std::sort(hashes.begin(), hashes.end());
  for (std::size_t i = 0; i < hashes.size();) {
    std::size_t j = i;
    while (j < hashes.size() && hashes[j] == hashes[i]) ++j;
    table.counts_.emplace_back(hashes[i], static_cast<std::uint32_t>(j - i));
    i = j;
  }
  hashes.clear();
  hashes.shrink_to_fit();

  // Pass 2: split hashes seen more than once into exact per-window variants.
  scan_windows(corpus, hasher, 0, corpus.file_tokens.size(),
               [&](std::uint64_t h, std::uint32_t f, std::uint32_t off) {
                 auto it = std::lower_bound(
                     table.counts_.begin(), table.counts_.end(), h,
                     [](const auto& p, std::uint64_t v) { return p.first < v; });
                 if (it->second < 2) return;
                 auto window = corpus.window(f, off, window_len);
                 auto& vars = table.variants_[h];
                 for (auto& v : vars) {
                   if (std::equal(window.begin(), window.end(), v.tokens.begin())) {
                     ++v.count;
                     return;
                   }
                 }
                 vars.push_back({{window.begin(), window.end()}, 1});
               });
  return table;
}

std::uint64_t WindowCountTable::count(std::span<const TokenId> window) const {
  if (window.size() != window_len_) {
    throw UsageError("window length " + std::to_string(window.size()) +
                     " does not match table window length " + std::to_string(window_len_));
  }
  const RollingWindowHasher hasher(window_len_);
  const std::uint64_t h = hasher.full(window);
  auto it = std::lower_bound(counts_.begin(), counts_.end(), h,
                             [](const auto& p, std::uint64_t v) { return p.first < v; });
  if (it == counts_.end() || it->first != h) return 0;
  if (it->second < 2) return 1;
  auto vit = variants_.find(h);
  for (const auto& v : vit->second) {
    if (std::equal(window.begin(), window.end(), v.tokens.begin())) return v.count;
  }
  return 0;
}

std::uint64_t WindowCountTable::distinct_windows() const {
  std::uint64_t distinct = 0;
  for (const auto& [hash, c] : counts_) {
    if (c < 2) {
      ++distinct;
    } else {
      distinct += variants_.at(hash).size();
    }
  }
  return distinct;
}

BucketHistogram WindowCountTable::bucket_histogram() const {
  BucketHistogram hist;
  for (const auto& [hash, c] : counts_) {
    if (c < 2) {
      hist.distinct[0] += 1;
      hist.positions[0] += 1;
      continue;
    }
    for (const auto& v : variants_.at(hash)) {
      const auto b = static_cast<std::size_t>(bucket_for_count(v.count));
      hist.distinct[b] += 1;
      hist.positions[b] += v.count;
    }
  }
  return hist;
}

std::uint64_t count_occurrences(const WindowIndex& index, const TokenSeq& window) {
  if (window.tokenizer_id != index.tokenizer_id()) {
    throw UsageError("window tokenized with '" + window.tokenizer_id +
                     "', index built with '" + index.tokenizer_id() + "'");
  }
  return index.count(window.span());
}

WindowIndex build_index(const Corpus& corpus, const TokenizerSpec& spec,
                        std::size_t window_len, unsigned threads) {
  if (corpus.files.empty()) throw UsageError("build_index: empty corpus");
  auto tok = make_tokenizer(spec);
  return WindowIndex::build(tokenize_corpus(corpus, *tok), window_len, threads);
}

}  // namespace extractaudit
