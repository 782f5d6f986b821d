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

#include "extractaudit/attack.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include "extractaudit/jsonl.hpp"
#include "extractaudit/metrics.hpp"
#include "extractaudit/version.hpp"

namespace extractaudit {

const char* comparison_name(ComparisonMode m) {
  return m == ComparisonMode::kTokenLevel ? "token_level" : "string_level";
}

ComparisonMode comparison_from_name(std::string_view name) {
  if (name == "token_level" || name == "token") return ComparisonMode::kTokenLevel;
  if (name == "string_level" || name == "string") return ComparisonMode::kStringLevel;
  throw UsageError("unknown comparison mode: " + std::string(name));
}

Adjudication adjudicate(const std::string& generated_text, const AttackSample& sample,
                        Tokenizer& tok) {
  if (tok.id() != sample.suffix.tokenizer_id) {
    throw UsageError("adjudicate: tokenizer '" + tok.id() + "' does not match sample ('" +
                     sample.suffix.tokenizer_id + "')");
  }
  Adjudication adj;
  TokenSeq generated = tok.encode(generated_text);
  const std::size_t suffix_len = sample.suffix.size();
  adj.short_generation = generated.size() < suffix_len;
  if (generated.size() > suffix_len) generated = slice(generated, 0, suffix_len);
  adj.generated_tokens = std::move(generated);
  adj.em_token = adj.generated_tokens.ids == sample.suffix.ids ? 1 : 0;
  adj.em_string = generated_text.size() >= sample.suffix_text.size() &&
                          generated_text.compare(0, sample.suffix_text.size(),
                                                 sample.suffix_text) == 0
                      ? 1
                      : 0;
  return adj;
}

// Benchmarks carry token ids, but whitespace-tokenizer ids are only
// meaningful inside the process that minted them, so built-in providers
// re-encode the stored texts. The byte provider re-encode must reproduce the
// stored ids exactly; a mismatch means the file is inconsistent. External
// tokenizers keep the stored ids (re-encoding would cost one round trip per
// sample and the benchmark is authoritative).
BenchmarkSet materialize_bench_tokens(const BenchmarkSet& bench, Tokenizer& tok) {
  if (tok.provider() == TokenizerProvider::kExternalHttp) return bench;
  BenchmarkSet out = bench;
  for (AttackSample& s : out.samples) {
    TokenSeq prefix = tok.encode(s.prefix_text);
    TokenSeq suffix = tok.encode(s.suffix_text);
    if (tok.provider() == TokenizerProvider::kByte &&
        (prefix.ids != s.prefix.ids || suffix.ids != s.suffix.ids)) {
      throw Error("benchmark sample " + s.sample_id +
                  ": stored tokens do not match re-encoded text");
    }
    s.prefix = std::move(prefix);
    s.suffix = std::move(suffix);
  }
  return out;
}

AttackResult score_generation(const AttackSample& sample, const std::string& generated_text,
                              const AttackConfig& config, Tokenizer& tok) {
  AttackResult res;
  res.sample_id = sample.sample_id;
  res.generated_text = generated_text;
  res.dup_count = sample.dup_count;
  res.bucket = sample.bucket;
  const Adjudication adj = adjudicate(generated_text, sample, tok);
  res.generated_tokens = adj.generated_tokens;
  res.em_token = adj.em_token;
  res.em_string = adj.em_string;
  res.short_generation = adj.short_generation;
  res.em = config.comparison == ComparisonMode::kTokenLevel ? adj.em_token : adj.em_string;
  res.win = res.em == 1;
  res.bleu = bleu(res.generated_tokens, sample.suffix);
  res.meteor = meteor(res.generated_tokens, sample.suffix);
  res.rouge_l = rouge_l(res.generated_tokens, sample.suffix);
  return res;
}

namespace {

AttackResult error_result(const AttackSample& sample, const std::string& what) {
  AttackResult res;
  res.sample_id = sample.sample_id;
  res.dup_count = sample.dup_count;
  res.bucket = sample.bucket;
  res.error = what;
  return res;
}

}  // namespace

AttackRun run_attack(const BenchmarkSet& bench, CompletionBackend& backend,
                     const AttackConfig& config, Tokenizer& tok,
                     const std::set<std::string>* only) {
  for (const AttackSample& s : bench.samples) {
    if (s.suffix.size() != config.suffix_len) {
      throw UsageError("benchmark suffix length " + std::to_string(s.suffix.size()) +
                       " does not match config suffix_len " +
                       std::to_string(config.suffix_len));
    }
    if (s.prefix.size() < config.prefix_len) {
      throw UsageError("config prefix_len " + std::to_string(config.prefix_len) +
                       " exceeds benchmark prefix length " + std::to_string(s.prefix.size()));
    }
  }

  AttackRun run;
  run.config = config;
  run.endpoint_fingerprint = backend.fingerprint();
  run.started = utc_timestamp();

  const BenchmarkSet work = materialize_bench_tokens(bench, tok);
  std::vector<const AttackSample*> todo;
  for (const AttackSample& s : work.samples) {
    if (only == nullptr || only->count(s.sample_id) > 0) todo.push_back(&s);
  }

  std::vector<AttackResult> results(todo.size());

  // Tokenizers are safe for concurrent use (byte is pure, whitespace interns
  // under its own lock, external clients are per-call), so workers only
  // synchronize on the work queue.
  auto process = [&](std::size_t i) {
    const AttackSample& sample = *todo[i];
    CompletionRequest req;
    req.prefix_text =
        truncate_prefix(sample, config.prefix_len, tok, config.truncate).prefix_text;
    req.max_new_tokens = static_cast<int>(config.suffix_len);
    const std::string generated = backend.complete(req);
    results[i] = score_generation(sample, generated, config, tok);
  };

  std::size_t start_at = 0;
  if (!todo.empty()) {
    // The first request runs alone: a transport failure here means the
    // endpoint is unreachable and the run aborts instead of producing a file
    // of error results.
    try {
      process(0);
    } catch (const TransportError& e) {
      throw Error(std::string("endpoint unreachable at start of run: ") + e.what());
    } catch (const std::exception& e) {
      results[0] = error_result(*todo[0], e.what());
    }
    start_at = 1;
  }

  const unsigned workers = std::max(1u, std::min(config.parallelism,
                                                 backend.parallelism_bound()));
  std::atomic<std::size_t> next{start_at};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      try {
        process(i);
      } catch (const std::exception& e) {
        results[i] = error_result(*todo[i], e.what());
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::sort(results.begin(), results.end(),
            [](const AttackResult& a, const AttackResult& b) {
              return a.sample_id < b.sample_id;
            });
  run.results = std::move(results);
  run.finished = utc_timestamp();

  std::uint64_t errors = 0;
  for (const auto& r : run.results) {
    if (!r.error.empty()) ++errors;
  }
  run.manifest = {{"type", "attack_run_manifest"},
                  {"run_label", config.run_label},
                  {"prefix_len", config.prefix_len},
                  {"suffix_len", config.suffix_len},
                  {"comparison", comparison_name(config.comparison)},
                  {"truncate", truncate_mode_name(config.truncate)},
                  {"parallelism", config.parallelism},
                  {"endpoint_fingerprint", run.endpoint_fingerprint},
                  {"bench_kind", bench_kind_name(bench.kind)},
                  {"bench_seed", bench.seed},
                  {"tokenizer_id", tok.id()},
                  {"n_results", run.results.size()},
                  {"n_errors", errors},
                  {"started", run.started},
                  {"finished", run.finished},
                  {"tool_version", kToolVersion}};
  return run;
}

void save_attack_run(const AttackRun& run, const std::filesystem::path& path) {
  std::ostringstream out;
  out << run.manifest.dump() << '\n';
  for (const AttackResult& r : run.results) {
    nlohmann::json rec;
    rec["sample_id"] = r.sample_id;
    rec["bucket"] = bucket_name(r.bucket);
    rec["dup_count"] = r.dup_count;
    if (r.error.empty()) {
      rec["generated_text"] = r.generated_text;
      rec["generated_tokens"] = r.generated_tokens.ids;
      rec["em"] = r.em;
      rec["em_token"] = r.em_token;
      rec["em_string"] = r.em_string;
      rec["bleu"] = r.bleu;
      rec["meteor"] = r.meteor;
      rec["rouge_l"] = r.rouge_l;
      rec["win"] = r.win;
      rec["short_generation"] = r.short_generation;
      rec["error"] = nullptr;
    } else {
      rec["error"] = r.error;
    }
    out << rec.dump() << '\n';
  }
  atomic_write_file(path, out.str());
}

AttackRun load_attack_run(const std::filesystem::path& path, bool tolerate_truncated_tail) {
  AttackRun run;
  bool have_manifest = false;
  for_each_jsonl(
      path,
      [&](std::size_t line_no, const nlohmann::json& rec) {
        if (!have_manifest) {
          if (!rec.is_object() || rec.value("type", "") != "attack_run_manifest") {
            throw FormatError("first line of " + path.string() +
                                  " must be an attack run manifest",
                              line_no);
          }
          run.manifest = rec;
          run.config.prefix_len = rec.at("prefix_len").get<std::size_t>();
          run.config.suffix_len = rec.at("suffix_len").get<std::size_t>();
          run.config.comparison =
              comparison_from_name(rec.at("comparison").get<std::string>());
          run.config.run_label = rec.at("run_label").get<std::string>();
          run.config.parallelism = rec.at("parallelism").get<unsigned>();
          run.endpoint_fingerprint = rec.at("endpoint_fingerprint").get<std::string>();
          run.started = rec.value("started", "");
          run.finished = rec.value("finished", "");
          have_manifest = true;
          return;
        }
        AttackResult r;
        r.sample_id = rec.at("sample_id").get<std::string>();
        r.bucket = bucket_from_name(rec.value("bucket", "d1"));
        r.dup_count = rec.value("dup_count", std::uint64_t{0});
        if (rec.contains("error") && !rec["error"].is_null()) {
          r.error = rec["error"].get<std::string>();
        } else {
          r.generated_text = rec.at("generated_text").get<std::string>();
          r.generated_tokens.tokenizer_id = run.manifest.value("tokenizer_id", "");
          r.generated_tokens.ids = rec.at("generated_tokens").get<std::vector<TokenId>>();
          r.em = rec.at("em").get<int>();
          r.em_token = rec.at("em_token").get<int>();
          r.em_string = rec.at("em_string").get<int>();
          r.bleu = rec.at("bleu").get<double>();
          r.meteor = rec.at("meteor").get<double>();
          r.rouge_l = rec.at("rouge_l").get<double>();
          r.win = rec.at("win").get<bool>();
          r.short_generation = rec.value("short_generation", false);
        }
        run.results.push_back(std::move(r));
      },
      tolerate_truncated_tail);
  if (!have_manifest) throw FormatError("empty attack run file: " + path.string());
  return run;
}

}  // namespace extractaudit
