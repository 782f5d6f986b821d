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

#include <algorithm>
#include <set>
#include <sstream>

#include "extractaudit/errors.hpp"
#include "extractaudit/hash.hpp"
#include "extractaudit/jsonl.hpp"
#include "extractaudit/rng.hpp"
#include "extractaudit/version.hpp"

namespace extractaudit {

const char* bench_kind_name(BenchKind k) {
  return k == BenchKind::kPretrainAttack ? "pretrain_attack" : "finetune_attack";
}

BenchKind bench_kind_from_name(std::string_view name) {
  if (name == "pretrain_attack") return BenchKind::kPretrainAttack;
  if (name == "finetune_attack") return BenchKind::kFinetuneAttack;
  throw UsageError("unknown benchmark kind: " + std::string(name));
}

const char* truncate_mode_name(TruncateMode m) {
  return m == TruncateMode::kLastK ? "last" : "first";
}

namespace {

struct Candidate {
  std::uint32_t file_ordinal = 0;
  std::uint32_t offset = 0;
  std::uint64_t dup_count = 0;

  friend bool operator<(const Candidate& a, const Candidate& b) {
    if (a.file_ordinal != b.file_ordinal) return a.file_ordinal < b.file_ordinal;
    return a.offset < b.offset;
  }
};

AttackSample materialize(const TokenizedCorpus& tc, const Candidate& cand,
                         std::size_t span_len, std::size_t suffix_len, Tokenizer& tok,
                         const char* id_prefix) {
  const std::size_t prefix_len = span_len - suffix_len;
  AttackSample s;
  s.file_id = tc.file_ids[cand.file_ordinal];
  s.sample_id = std::string(id_prefix) + ":" + s.file_id + ":" + std::to_string(cand.offset);
  s.token_offset = cand.offset;
  const auto window = tc.window(cand.file_ordinal, cand.offset, span_len);
  s.prefix.tokenizer_id = tc.tokenizer_id;
  s.prefix.ids.assign(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(prefix_len));
  s.suffix.tokenizer_id = tc.tokenizer_id;
  s.suffix.ids.assign(window.begin() + static_cast<std::ptrdiff_t>(prefix_len), window.end());
  s.prefix_text = tok.decode(s.prefix);
  s.suffix_text = tok.decode(s.suffix);
  s.dup_count = cand.dup_count;
  s.bucket = bucket_for_count(cand.dup_count);
  s.prefix_len_effective = prefix_len;
  return s;
}

void validate_span(std::size_t span_len, std::size_t suffix_len) {
  if (suffix_len == 0 || span_len <= suffix_len) {
    throw UsageError("need span_len > suffix_len > 0");
  }
}

nlohmann::json base_manifest(const WindowIndex& index, BenchKind kind, std::uint64_t seed,
                             std::size_t span_len, std::size_t suffix_len,
                             Tokenizer& tok) {
  return {{"type", "benchmark_manifest"},
          {"kind", bench_kind_name(kind)},
          {"seed", seed},
          {"span_len", span_len},
          {"prefix_len", span_len - suffix_len},
          {"suffix_len", suffix_len},
          {"tokenizer_id", index.tokenizer_id()},
          {"tokenizer_provider", provider_name(tok.provider())},
          {"corpus_fingerprint", hex64(index.corpus_fingerprint())},
          {"corpus_files", index.tokens().file_ids.size()},
          {"tool_version", kToolVersion}};
}

}  // namespace

BenchmarkSet build_pretrain_bench(const WindowIndex& index, const WindowIndex* exclude,
                                  const PretrainBuildConfig& config, Tokenizer& tok) {
  validate_span(config.span_len, config.suffix_len);
  if (config.n == 0) throw UsageError("n must be >= 1");
  if (index.window_len() != config.span_len) {
    throw UsageError("index window length " + std::to_string(index.window_len()) +
                     " does not match span_len " + std::to_string(config.span_len));
  }
  if (exclude != nullptr) {
    if (exclude->window_len() != config.span_len) {
      throw UsageError("exclude index window length mismatch");
    }
    if (exclude->tokenizer_id() != index.tokenizer_id()) {
      throw UsageError("exclude index uses a different tokenizer");
    }
  }

  const TokenizedCorpus& tc = index.tokens();
  std::vector<std::uint32_t> eligible;
  std::uint64_t short_files = 0;
  for (std::uint32_t f = 0; f < tc.file_tokens.size(); ++f) {
    if (tc.file_tokens[f].size() >= config.span_len) {
      eligible.push_back(f);
    } else {
      ++short_files;  // files shorter than the span are discarded
    }
  }

  SeededRng rng(config.seed);
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  std::vector<Candidate> pool;
  std::uint64_t low_dup = 0, excluded = 0, repeat_draws = 0;
  std::size_t passes = 0;

  // One uniform span draw per eligible file per pass, repeated until the pool
  // suffices; avoids biasing toward long files within a pass.
  while (passes < config.max_passes && pool.size() < config.n && !eligible.empty()) {
    ++passes;
    std::uint64_t new_draws = 0;
    for (std::uint32_t f : eligible) {
      const std::uint64_t span_count = tc.file_tokens[f].size() - config.span_len + 1;
      const std::uint32_t off = static_cast<std::uint32_t>(rng.below(span_count));
      if (!seen.insert({f, off}).second) {
        ++repeat_draws;
        continue;
      }
      ++new_draws;
      const auto window = tc.window(f, off, config.span_len);
      const std::uint64_t dup = index.count(window);
      if (dup < config.min_dup_count) {
        ++low_dup;
        continue;
      }
      if (exclude != nullptr && exclude->count(window) > 0) {
        ++excluded;
        continue;
      }
      pool.push_back({f, off, dup});
    }
    if (new_draws == 0) break;  // candidate space exhausted
  }

  if (pool.size() < config.n) {
    throw UnderfillError(config.n, pool.size(),
                         {{"eligible_pool", pool.size()},
                          {"rejected_dup_below_threshold", low_dup},
                          {"rejected_in_exclude_set", excluded},
                          {"files_shorter_than_span", short_files},
                          {"passes", passes}});
  }

  std::sort(pool.begin(), pool.end());
  rng.shuffle(pool);
  pool.resize(config.n);
  std::sort(pool.begin(), pool.end());

  BenchmarkSet bench;
  bench.kind = BenchKind::kPretrainAttack;
  bench.seed = config.seed;
  bench.samples.reserve(pool.size());
  for (const Candidate& cand : pool) {
    bench.samples.push_back(
        materialize(tc, cand, config.span_len, config.suffix_len, tok, "pt"));
  }
  bench.manifest = base_manifest(index, bench.kind, config.seed, config.span_len,
                                 config.suffix_len, tok);
  bench.manifest["n"] = config.n;
  bench.manifest["min_dup_count"] = config.min_dup_count;
  bench.manifest["max_passes"] = config.max_passes;
  bench.manifest["passes_used"] = passes;
  bench.manifest["span_sampling"] = "uniform-per-file-pass";
  bench.manifest["selection"] = "seeded-shuffle-without-replacement";
  bench.manifest["exclude_fingerprint"] =
      exclude != nullptr ? hex64(exclude->corpus_fingerprint()) : "";
  return bench;
}

std::map<DupBucket, BenchmarkSet> build_finetune_bench(const WindowIndex& index,
                                                       const FinetuneBuildConfig& config,
                                                       Tokenizer& tok) {
  validate_span(config.span_len, config.suffix_len);
  if (config.stride < 1) throw UsageError("stride must be >= 1");
  if (config.n_per_bucket == 0) throw UsageError("n_per_bucket must be >= 1");
  if (index.window_len() != config.span_len) {
    throw UsageError("index window length " + std::to_string(index.window_len()) +
                     " does not match span_len " + std::to_string(config.span_len));
  }

  const TokenizedCorpus& tc = index.tokens();
  const std::size_t prefix_len = config.span_len - config.suffix_len;

  // Suffix occurrences are looked up in a dedicated index so the uniqueness
  // guarantee can be enforced corpus-wide, not just within the candidate set.
  const WindowIndex suffix_index = WindowIndex::build(index.tokens_ptr(), config.suffix_len);

  std::map<DupBucket, std::vector<Candidate>> candidates;
  std::uint64_t enumerated = 0, alt_prefix = 0;
  for (std::uint32_t f = 0; f < tc.file_tokens.size(); ++f) {
    const auto& toks = tc.file_tokens[f];
    if (toks.size() < config.span_len) continue;
    for (std::size_t off = 0; off + config.span_len <= toks.size(); off += config.stride) {
      ++enumerated;
      const auto window = tc.window(f, static_cast<std::uint32_t>(off), config.span_len);
      const auto suffix = window.subspan(prefix_len);
      const auto prefix = window.subspan(0, prefix_len);
      // Every corpus occurrence of this suffix that has room for a full
      // prefix must be preceded by the same prefix.
      bool unique = true;
      for (const WindowPos& occ : suffix_index.occurrences(suffix)) {
        if (occ.offset < prefix_len) continue;
        const auto other =
            tc.window(occ.file_ordinal, occ.offset - static_cast<std::uint32_t>(prefix_len),
                      prefix_len);
        if (!std::equal(prefix.begin(), prefix.end(), other.begin())) {
          unique = false;
          break;
        }
      }
      if (!unique) {
        ++alt_prefix;
        continue;
      }
      const std::uint64_t dup = index.count(window);
      candidates[bucket_for_count(dup)].push_back(
          {f, static_cast<std::uint32_t>(off), dup});
    }
  }

  // Selection: per bucket, canonical order then seeded shuffle, taking
  // candidates greedily while skipping suffixes already selected.
  std::map<DupBucket, BenchmarkSet> out;
  std::map<std::string, std::uint64_t> shortfalls;
  for (DupBucket b : {DupBucket::kD1, DupBucket::kD2, DupBucket::kD3, DupBucket::kDGt3}) {
    auto& cands = candidates[b];
    std::sort(cands.begin(), cands.end());
    SeededRng rng(splitmix64(config.seed ^ splitmix64(static_cast<std::uint64_t>(b))));
    rng.shuffle(cands);
    std::set<std::vector<TokenId>> taken_suffixes;
    std::vector<Candidate> selected;
    for (const Candidate& cand : cands) {
      if (selected.size() == config.n_per_bucket) break;
      const auto suffix =
          tc.window(cand.file_ordinal, cand.offset + static_cast<std::uint32_t>(prefix_len),
                    config.suffix_len);
      if (!taken_suffixes.insert({suffix.begin(), suffix.end()}).second) continue;
      selected.push_back(cand);
    }
    if (selected.size() < config.n_per_bucket) {
      shortfalls[std::string("bucket_") + bucket_name(b) + "_eligible"] = selected.size();
      continue;
    }
    std::sort(selected.begin(), selected.end());

    BenchmarkSet bench;
    bench.kind = BenchKind::kFinetuneAttack;
    bench.seed = config.seed;
    for (const Candidate& cand : selected) {
      bench.samples.push_back(
          materialize(tc, cand, config.span_len, config.suffix_len, tok, "ft"));
    }
    bench.manifest = base_manifest(index, bench.kind, config.seed, config.span_len,
                                   config.suffix_len, tok);
    bench.manifest["n"] = config.n_per_bucket;
    bench.manifest["bucket"] = bucket_name(b);
    bench.manifest["stride"] = config.stride;
    bench.manifest["candidates_enumerated"] = enumerated;
    bench.manifest["rejected_alternate_prefix"] = alt_prefix;
    bench.manifest["selection"] = "seeded-shuffle-suffix-unique";
    out.emplace(b, std::move(bench));
  }

  if (!shortfalls.empty()) {
    shortfalls["candidates_enumerated"] = enumerated;
    shortfalls["rejected_alternate_prefix"] = alt_prefix;
    throw UnderfillError(config.n_per_bucket, 0, shortfalls);
  }
  return out;
}

AttackSample truncate_prefix(const AttackSample& sample, std::size_t k, Tokenizer& tok,
                             TruncateMode mode) {
  if (k > sample.prefix.size()) {
    throw UsageError("truncate_prefix: k=" + std::to_string(k) + " exceeds prefix length " +
                     std::to_string(sample.prefix.size()));
  }
  AttackSample out = sample;
  const std::size_t begin = mode == TruncateMode::kLastK ? sample.prefix.size() - k : 0;
  out.prefix = slice(sample.prefix, begin, k);
  out.prefix_text = tok.decode(out.prefix);
  out.prefix_len_effective = k;
  return out;
}

void save_benchmark(const BenchmarkSet& bench, const std::filesystem::path& path) {
  std::ostringstream out;
  out << bench.manifest.dump() << '\n';
  for (const AttackSample& s : bench.samples) {
    nlohmann::json rec = {{"sample_id", s.sample_id},
                          {"file_id", s.file_id},
                          {"token_offset", s.token_offset},
                          {"prefix_tokens", s.prefix.ids},
                          {"suffix_tokens", s.suffix.ids},
                          {"prefix_text", s.prefix_text},
                          {"suffix_text", s.suffix_text},
                          {"dup_count", s.dup_count},
                          {"bucket", bucket_name(s.bucket)},
                          {"prefix_len_effective", s.prefix_len_effective}};
    out << rec.dump() << '\n';
  }
  atomic_write_file(path, out.str());
}

BenchmarkSet load_benchmark(const std::filesystem::path& path) {
  BenchmarkSet bench;
  bool have_manifest = false;
  std::set<std::string> ids;
  for_each_jsonl(path, [&](std::size_t line_no, const nlohmann::json& rec) {
    if (!have_manifest) {
      if (!rec.is_object() || rec.value("type", "") != "benchmark_manifest") {
        throw FormatError("first line of " + path.string() + " must be a benchmark manifest",
                          line_no);
      }
      bench.manifest = rec;
      bench.kind = bench_kind_from_name(rec.at("kind").get<std::string>());
      bench.seed = rec.at("seed").get<std::uint64_t>();
      have_manifest = true;
      return;
    }
    AttackSample s;
    s.sample_id = rec.at("sample_id").get<std::string>();
    s.file_id = rec.at("file_id").get<std::string>();
    s.token_offset = rec.at("token_offset").get<std::uint64_t>();
    const std::string tokenizer_id = bench.manifest.at("tokenizer_id").get<std::string>();
    s.prefix.tokenizer_id = tokenizer_id;
    s.prefix.ids = rec.at("prefix_tokens").get<std::vector<TokenId>>();
    s.suffix.tokenizer_id = tokenizer_id;
    s.suffix.ids = rec.at("suffix_tokens").get<std::vector<TokenId>>();
    s.prefix_text = rec.at("prefix_text").get<std::string>();
    s.suffix_text = rec.at("suffix_text").get<std::string>();
    s.dup_count = rec.at("dup_count").get<std::uint64_t>();
    s.bucket = bucket_from_name(rec.at("bucket").get<std::string>());
    s.prefix_len_effective = rec.at("prefix_len_effective").get<std::size_t>();
    if (!ids.insert(s.sample_id).second) {
      throw FormatError("duplicate sample_id " + s.sample_id + " in " + path.string(),
                        line_no);
    }
    bench.samples.push_back(std::move(s));
  });
  if (!have_manifest) throw FormatError("empty benchmark file: " + path.string());
  return bench;
}

}  // namespace extractaudit
