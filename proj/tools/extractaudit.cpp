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

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "extractaudit/analyze.hpp"
#include "extractaudit/attack.hpp"
#include "extractaudit/bench.hpp"
#include "extractaudit/corpus.hpp"
#include "extractaudit/dup_index.hpp"
#include "extractaudit/errors.hpp"
#include "extractaudit/hash.hpp"
#include "extractaudit/jsonl.hpp"
#include "extractaudit/metrics.hpp"
#include "extractaudit/mock_memorizer.hpp"
#include "extractaudit/model_client.hpp"
#include "extractaudit/version.hpp"

namespace {

using namespace extractaudit;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitUnderfill = 3;

struct CorpusOptions {
  std::string path;
  std::string format = "directory";
  bool no_filter = false;
  std::uint64_t max_file_bytes = FilterConfig{}.max_file_bytes;
  double min_alpha_fraction = FilterConfig{}.min_alpha_fraction;
  std::uint64_t max_line_length = FilterConfig{}.max_line_length;
  std::vector<std::string> markers;
  std::string rejected_out;
};

void add_corpus_options(CLI::App* cmd, CorpusOptions& opts) {
  cmd->add_option("--corpus", opts.path, "corpus root directory or JSONL file")
      ->required();
  cmd->add_option("--corpus-format", opts.format, "corpus format")
      ->check(CLI::IsMember({"directory", "jsonl"}))
      ->capture_default_str();
  cmd->add_flag("--no-filter", opts.no_filter, "skip the hygiene filters");
  cmd->add_option("--max-file-bytes", opts.max_file_bytes, "too_long threshold")
      ->capture_default_str();
  cmd->add_option("--min-alpha", opts.min_alpha_fraction, "low_alpha threshold")
      ->capture_default_str();
  cmd->add_option("--max-line-length", opts.max_line_length,
                  "encoded_data line-length threshold")
      ->capture_default_str();
  cmd->add_option("--marker", opts.markers,
                  "autogenerated marker string (repeatable; replaces defaults)");
  cmd->add_option("--rejected-out", opts.rejected_out,
                  "write the rejection log (JSONL) here");
}

FilterConfig filter_config_of(const CorpusOptions& opts) {
  FilterConfig fc;
  fc.max_file_bytes = opts.max_file_bytes;
  fc.min_alpha_fraction = opts.min_alpha_fraction;
  fc.max_line_length = opts.max_line_length;
  if (!opts.markers.empty()) fc.autogenerated_markers = opts.markers;
  return fc;
}

Corpus load_and_filter(const CorpusOptions& opts, nlohmann::json* cli_manifest) {
  const CorpusFormat format =
      opts.format == "jsonl" ? CorpusFormat::kJsonl : CorpusFormat::kDirectory;
  Corpus corpus = load_corpus(opts.path, format);
  (*cli_manifest)["corpus"] = opts.path;
  (*cli_manifest)["corpus_format"] = opts.format;
  if (opts.no_filter) {
    (*cli_manifest)["filter"] = nullptr;
    return corpus;
  }
  const FilterConfig fc = filter_config_of(opts);
  FilterOutcome outcome = apply_filters(corpus, fc);
  (*cli_manifest)["filter"] = fc.to_json();
  (*cli_manifest)["files_rejected"] = outcome.rejected.size();
  if (!opts.rejected_out.empty()) {
    atomic_write_file(opts.rejected_out, rejection_log_jsonl(outcome.rejected));
  }
  return std::move(outcome.kept);
}

struct TokenizerOptions {
  std::string provider;  // empty = "byte", or taken from a bench manifest
  std::string url;
  std::string id;
};

void add_tokenizer_options(CLI::App* cmd, TokenizerOptions& opts) {
  cmd->add_option("--tokenizer", opts.provider, "byte|whitespace|external_http")
      ->check(CLI::IsMember({"byte", "whitespace", "external_http"}));
  cmd->add_option("--tokenizer-url", opts.url, "external tokenizer endpoint url");
  cmd->add_option("--tokenizer-id", opts.id, "tokenizer id recorded in outputs");
}

TokenizerSpec tokenizer_spec_of(const TokenizerOptions& opts,
                                const nlohmann::json* bench_manifest = nullptr) {
  TokenizerOptions resolved = opts;
  if (resolved.provider.empty() && bench_manifest != nullptr) {
    resolved.provider = bench_manifest->value("tokenizer_provider", "byte");
    if (resolved.id.empty()) resolved.id = bench_manifest->value("tokenizer_id", "");
    if (resolved.url.empty()) resolved.url = bench_manifest->value("tokenizer_url", "");
  }
  if (resolved.provider.empty()) resolved.provider = "byte";
  TokenizerSpec spec;
  spec.provider = provider_from_name(resolved.provider);
  spec.endpoint_url = resolved.url;
  spec.tokenizer_id = resolved.id;
  if (spec.tokenizer_id.empty()) {
    spec.tokenizer_id = spec.provider == TokenizerProvider::kExternalHttp
                            ? resolved.url
                            : resolved.provider;
  }
  return spec;
}

void report_underfill(const UnderfillError& e) {
  std::cerr << "underfill: requested " << e.requested() << ", eligible " << e.available()
            << "\n";
  for (const auto& [reason, count] : e.reasons()) {
    std::cerr << "  " << reason << ": " << count << "\n";
  }
}

void write_output(const std::string& out_path, const std::string& content,
                  const nlohmann::json& manifest) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
    return;
  }
  atomic_write_file(out_path, content);
  atomic_write_file(out_path + ".manifest.json", manifest.dump(2) + "\n");
}

std::map<std::string, Category> labels_map_from_csv(const std::string& path) {
  const std::vector<LabelRecord> all = load_labels_csv(path);
  std::map<std::string, std::vector<LabelRecord>> by_annotator;
  for (const LabelRecord& l : all) by_annotator[l.annotator_id].push_back(l);
  std::map<std::string, Category> out;
  if (by_annotator.size() == 1) {
    for (const LabelRecord& l : all) out[l.sample_id] = l.category;
  } else if (by_annotator.size() == 2) {
    auto it = by_annotator.begin();
    const auto& a = it->second;
    const auto& b = std::next(it)->second;
    for (const auto& [sample_id, category] : filter_agreed(a, b)) {
      out[sample_id] = category;
    }
  } else {
    throw UsageError(path + ": expected 1 or 2 annotators, found " +
                     std::to_string(by_annotator.size()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// build-pretrain / build-finetune / dupcount

struct BuildCommon {
  CorpusOptions corpus;
  TokenizerOptions tokenizer;
  std::size_t span_len = 300;
  std::size_t suffix_len = 50;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string save_index;
  std::string load_index;
};

void add_build_common(CLI::App* cmd, BuildCommon& opts) {
  add_corpus_options(cmd, opts.corpus);
  add_tokenizer_options(cmd, opts.tokenizer);
  cmd->add_option("--span-len", opts.span_len, "attack span length in tokens")
      ->capture_default_str();
  cmd->add_option("--suffix-len", opts.suffix_len, "ground-truth suffix length")
      ->capture_default_str();
  cmd->add_option("--seed", opts.seed, "sampling seed")->capture_default_str();
  cmd->add_option("--threads", opts.threads, "index build threads")->capture_default_str();
  cmd->add_option("--save-index", opts.save_index, "persist the window index here");
  cmd->add_option("--index", opts.load_index,
                  "load a previously saved window index instead of rebuilding");
}

WindowIndex make_index(const BuildCommon& opts, const Corpus& corpus,
                       const TokenizerSpec& spec) {
  auto tok = make_tokenizer(spec);
  auto tokens = tokenize_corpus(corpus, *tok);
  WindowIndex index = opts.load_index.empty()
                          ? WindowIndex::build(tokens, opts.span_len, opts.threads)
                          : WindowIndex::load(opts.load_index, tokens);
  if (!opts.save_index.empty()) index.save(opts.save_index);
  return index;
}

int cmd_build_pretrain(const BuildCommon& opts, std::uint64_t n, std::uint64_t min_dup,
                       std::size_t max_passes, const std::string& exclude_path,
                       const std::string& exclude_format, const std::string& out) {
  nlohmann::json cli = {{"subcommand", "build-pretrain"}, {"tool_version", kToolVersion}};
  const Corpus corpus = load_and_filter(opts.corpus, &cli);
  const TokenizerSpec spec = tokenizer_spec_of(opts.tokenizer);
  const WindowIndex index = make_index(opts, corpus, spec);

  std::optional<WindowIndex> exclude;
  if (!exclude_path.empty()) {
    CorpusOptions exclude_opts = opts.corpus;
    exclude_opts.path = exclude_path;
    if (!exclude_format.empty()) exclude_opts.format = exclude_format;
    exclude_opts.rejected_out.clear();
    nlohmann::json exclude_manifest;
    const Corpus exclude_corpus = load_and_filter(exclude_opts, &exclude_manifest);
    auto tok = make_tokenizer(spec);
    exclude = WindowIndex::build(tokenize_corpus(exclude_corpus, *tok), opts.span_len,
                                 opts.threads);
    cli["exclude_corpus"] = exclude_path;
  }

  PretrainBuildConfig config;
  config.span_len = opts.span_len;
  config.suffix_len = opts.suffix_len;
  config.n = n;
  config.min_dup_count = min_dup;
  config.max_passes = max_passes;
  config.seed = opts.seed;

  auto tok = make_tokenizer(spec);
  BenchmarkSet bench =
      build_pretrain_bench(index, exclude ? &*exclude : nullptr, config, *tok);
  bench.manifest["cli"] = cli;
  bench.manifest["tokenizer_url"] = spec.endpoint_url;
  save_benchmark(bench, out);
  std::cout << "wrote " << bench.samples.size() << " samples to " << out << "\n";
  return kExitOk;
}

int cmd_build_finetune(const BuildCommon& opts, std::uint64_t n_per_bucket,
                       std::size_t stride, const std::string& out_prefix) {
  nlohmann::json cli = {{"subcommand", "build-finetune"}, {"tool_version", kToolVersion}};
  const Corpus corpus = load_and_filter(opts.corpus, &cli);
  const TokenizerSpec spec = tokenizer_spec_of(opts.tokenizer);
  const WindowIndex index = make_index(opts, corpus, spec);

  FinetuneBuildConfig config;
  config.span_len = opts.span_len;
  config.suffix_len = opts.suffix_len;
  config.stride = stride;
  config.n_per_bucket = n_per_bucket;
  config.seed = opts.seed;

  auto tok = make_tokenizer(spec);
  std::map<DupBucket, BenchmarkSet> sets = build_finetune_bench(index, config, *tok);
  for (auto& [bucket, bench] : sets) {
    bench.manifest["cli"] = cli;
    bench.manifest["tokenizer_url"] = spec.endpoint_url;
    const std::string path = out_prefix + "." + bucket_name(bucket) + ".jsonl";
    save_benchmark(bench, path);
    std::cout << "wrote " << bench.samples.size() << " samples to " << path << "\n";
  }
  return kExitOk;
}

int cmd_dupcount(const BuildCommon& opts, std::size_t window_len, bool count_only,
                 const std::string& format, const std::string& out) {
  nlohmann::json cli = {{"subcommand", "dupcount"}, {"tool_version", kToolVersion}};
  const Corpus corpus = load_and_filter(opts.corpus, &cli);
  const TokenizerSpec spec = tokenizer_spec_of(opts.tokenizer);
  auto tok = make_tokenizer(spec);
  auto tokens = tokenize_corpus(corpus, *tok);

  BucketHistogram hist;
  std::uint64_t total = 0, distinct = 0;
  if (count_only) {
    if (!opts.save_index.empty() || !opts.load_index.empty()) {
      throw UsageError("--count-only cannot be combined with --save-index/--index");
    }
    const WindowCountTable table = WindowCountTable::build(*tokens, window_len);
    hist = table.bucket_histogram();
    total = table.total_windows();
    distinct = table.distinct_windows();
  } else {
    const WindowIndex index = opts.load_index.empty()
                                  ? WindowIndex::build(tokens, window_len, opts.threads)
                                  : WindowIndex::load(opts.load_index, tokens);
    if (!opts.save_index.empty()) index.save(opts.save_index);
    hist = index.bucket_histogram();
    total = index.total_windows();
    distinct = index.distinct_windows();
  }

  nlohmann::json report = {
      {"type", "dupcount_report"},
      {"window_len", window_len},
      {"tokenizer_id", tok->id()},
      {"corpus_fingerprint", hex64(tokens->fingerprint)},
      {"mode", count_only ? "count_table" : "index"},
      {"total_positions", total},
      {"distinct_windows", distinct},
      {"distinct_by_bucket",
       {{"d1", hist.distinct[0]},
        {"d2", hist.distinct[1]},
        {"d3", hist.distinct[2]},
        {"dGt3", hist.distinct[3]}}},
      {"positions_by_bucket",
       {{"d1", hist.positions[0]},
        {"d2", hist.positions[1]},
        {"d3", hist.positions[2]},
        {"dGt3", hist.positions[3]}}},
      {"tool_version", kToolVersion}};

  std::string content;
  if (format == "json") {
    content = report.dump(2) + "\n";
  } else {
    std::ostringstream text;
    text << "windows of length " << window_len << ": " << total << " positions, "
         << distinct << " distinct\n";
    for (std::size_t b = 0; b < 4; ++b) {
      text << "  " << bucket_name(static_cast<DupBucket>(b)) << ": " << hist.distinct[b]
           << " distinct, " << hist.positions[b] << " positions\n";
    }
    content = text.str();
  }
  cli["report"] = report;
  write_output(out, content, cli);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// attack / score

int cmd_attack(const std::string& bench_path, const std::string& endpoint_url,
               const std::string& model_name, std::size_t prefix_len,
               const std::string& comparison, const std::string& truncate,
               unsigned parallelism, int timeout_ms, int max_retries,
               const std::string& run_label, const TokenizerOptions& tok_opts,
               const std::string& out, bool resume) {
  const BenchmarkSet bench = load_benchmark(bench_path);
  const TokenizerSpec spec = tokenizer_spec_of(tok_opts, &bench.manifest);
  auto tok = make_tokenizer(spec);

  CompletionEndpoint endpoint;
  endpoint.base_url = endpoint_url;
  endpoint.model_name = model_name;
  endpoint.timeout_ms = timeout_ms;
  endpoint.max_retries = max_retries;
  endpoint.parallelism_bound = std::max(1u, parallelism);
  HttpCompletionClient client(endpoint);

  AttackConfig config;
  config.prefix_len = prefix_len;
  config.suffix_len = bench.manifest.value("suffix_len", std::size_t{50});
  config.comparison = comparison_from_name(comparison);
  config.truncate = truncate == "first" ? TruncateMode::kFirstK : TruncateMode::kLastK;
  config.parallelism = parallelism;
  config.run_label = run_label;

  std::vector<AttackResult> kept;
  std::set<std::string> missing;
  for (const AttackSample& s : bench.samples) missing.insert(s.sample_id);
  bool resumed = false;
  if (resume && std::filesystem::exists(out)) {
    const AttackRun previous = load_attack_run(out, /*tolerate_truncated_tail=*/true);
    for (const AttackResult& r : previous.results) {
      if (r.error.empty() && missing.erase(r.sample_id) > 0) kept.push_back(r);
    }
    resumed = !kept.empty();
  }

  AttackRun run = run_attack(bench, client, config, *tok, resumed ? &missing : nullptr);
  run.results.insert(run.results.end(), kept.begin(), kept.end());
  std::sort(run.results.begin(), run.results.end(),
            [](const AttackResult& a, const AttackResult& b) {
              return a.sample_id < b.sample_id;
            });
  std::uint64_t errors = 0;
  for (const auto& r : run.results) {
    if (!r.error.empty()) ++errors;
  }
  run.manifest["n_results"] = run.results.size();
  run.manifest["n_errors"] = errors;
  run.manifest["resumed"] = resumed;
  run.manifest["bench_file"] = bench_path;
  run.manifest["bench_file_fingerprint"] = hex64(fnv1a64(read_file(bench_path)));
  run.manifest["endpoint_url"] = endpoint_url;
  run.manifest["model_name"] = model_name;
  run.manifest["cli"] = {{"subcommand", "attack"}, {"tool_version", kToolVersion}};
  save_attack_run(run, out);

  std::uint64_t wins = 0;
  for (const auto& r : run.results) {
    if (r.win) ++wins;
  }
  std::cout << "wrote " << run.results.size() << " results to " << out << " (" << wins
            << " wins, " << errors << " errors)\n";
  return kExitOk;
}

int cmd_score(const std::string& run_path, const std::string& bench_path,
              const std::string& comparison, const TokenizerOptions& tok_opts,
              const std::string& out) {
  const BenchmarkSet bench = load_benchmark(bench_path);
  const TokenizerSpec spec = tokenizer_spec_of(tok_opts, &bench.manifest);
  auto tok = make_tokenizer(spec);
  const BenchmarkSet work = materialize_bench_tokens(bench, *tok);
  std::map<std::string, const AttackSample*> by_id;
  for (const AttackSample& s : work.samples) by_id[s.sample_id] = &s;

  AttackRun run = load_attack_run(run_path);
  AttackConfig config = run.config;
  config.comparison = comparison_from_name(comparison);
  for (AttackResult& r : run.results) {
    if (!r.error.empty()) continue;
    auto it = by_id.find(r.sample_id);
    if (it == by_id.end()) {
      throw UsageError("run result " + r.sample_id + " is not in benchmark " + bench_path);
    }
    r = score_generation(*it->second, r.generated_text, config, *tok);
  }
  run.config = config;
  run.manifest["comparison"] = comparison_name(config.comparison);
  run.manifest["rescored_from"] = run_path;
  run.manifest["cli"] = {{"subcommand", "score"}, {"tool_version", kToolVersion}};
  save_attack_run(run, out);
  std::cout << "rescored " << run.results.size() << " results to " << out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report / kappa / mock-serve

int cmd_report(const std::vector<std::string>& run_paths, const std::string& group_by,
               const std::string& baseline, const std::string& labels_path,
               const std::string& format, const std::string& out) {
  std::vector<AttackRun> runs;
  runs.reserve(run_paths.size());
  for (const std::string& p : run_paths) runs.push_back(load_attack_run(p));

  std::vector<GroupKey> keys;
  std::stringstream ss(group_by);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (!part.empty()) keys.push_back(group_key_from_name(part));
  }

  std::optional<std::map<std::string, Category>> labels;
  if (!labels_path.empty()) labels = labels_map_from_csv(labels_path);

  RateTable table = aggregate(runs, keys, labels ? &*labels : nullptr);
  if (!baseline.empty()) {
    table = delta_vs_baseline(std::move(table), baseline_key_from_string(baseline));
  }
  const std::string content = render_rate_table(table, report_format_from_name(format));
  nlohmann::json manifest = {{"subcommand", "report"},
                             {"runs", run_paths},
                             {"group_by", group_by},
                             {"baseline", baseline},
                             {"labels", labels_path},
                             {"format", format},
                             {"excluded_errors", table.excluded_errors},
                             {"excluded_unlabeled", table.excluded_unlabeled},
                             {"tool_version", kToolVersion}};
  write_output(out, content, manifest);
  return kExitOk;
}

int cmd_kappa(const std::string& labels_a, const std::string& labels_b,
              const std::string& format, const std::string& out) {
  const auto a = load_single_annotator_csv(labels_a);
  const auto b = load_single_annotator_csv(labels_b);
  const KappaResult result = cohens_kappa(a, b);
  const std::string content = render_kappa(result, report_format_from_name(format));
  nlohmann::json manifest = {{"subcommand", "kappa"},
                             {"labels_a", labels_a},
                             {"labels_b", labels_b},
                             {"agreed", filter_agreed(a, b).size()},
                             {"tool_version", kToolVersion}};
  write_output(out, content, manifest);
  return kExitOk;
}

int cmd_mock_serve(const std::string& bench_path, double mem_prob, double mem_prob_linear,
                   std::size_t min_context, std::uint64_t seed, const std::string& host,
                   int port, const TokenizerOptions& tok_opts) {
  const BenchmarkSet bench = load_benchmark(bench_path);
  const TokenizerSpec spec = tokenizer_spec_of(tok_opts, &bench.manifest);
  std::shared_ptr<Tokenizer> tok = make_tokenizer(spec);
  const MemProbability prob = mem_prob_linear > 0.0
                                  ? MemProbability::linear_in_dup(mem_prob_linear)
                                  : MemProbability::constant_p(mem_prob);
  auto mock = std::make_shared<MockMemorizer>(store_from_benchmark(bench), prob,
                                              min_context, seed, tok);
  MockServer server(mock);
  const int bound = server.start(host, port);
  std::cout << "listening on http://" << host << ":" << bound << " ("
            << bench.samples.size() << " planted samples, mem_prob "
            << prob.to_json().dump() << ", min_context " << min_context << ", seed "
            << seed << ")" << std::endl;
  for (;;) std::this_thread::sleep_for(std::chrono::seconds(3600));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"extractaudit: targeted data-extraction attack benchmarks and audits"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read defaults from a TOML/INI config file");

  std::function<int()> action;

  // build-pretrain
  auto* bp = app.add_subcommand("build-pretrain",
                                "sample a pre-training attack benchmark (dup > threshold)");
  auto bp_common = std::make_shared<BuildCommon>();
  add_build_common(bp, *bp_common);
  auto bp_n = std::make_shared<std::uint64_t>(1000);
  auto bp_min_dup = std::make_shared<std::uint64_t>(4);
  auto bp_max_passes = std::make_shared<std::size_t>(64);
  auto bp_exclude = std::make_shared<std::string>();
  auto bp_exclude_format = std::make_shared<std::string>();
  auto bp_out = std::make_shared<std::string>();
  bp->add_option("--n", *bp_n, "number of samples")->capture_default_str();
  bp->add_option("--min-dup", *bp_min_dup, "minimum duplication count")
      ->capture_default_str();
  bp->add_option("--max-passes", *bp_max_passes, "per-file sampling passes")
      ->capture_default_str();
  bp->add_option("--exclude", *bp_exclude,
                 "corpus whose windows must not appear in the benchmark");
  bp->add_option("--exclude-format", *bp_exclude_format, "exclude corpus format")
      ->check(CLI::IsMember({"directory", "jsonl"}));
  bp->add_option("--out", *bp_out, "output benchmark JSONL")->required();
  bp->callback([&action, bp_common, bp_n, bp_min_dup, bp_max_passes, bp_exclude,
                bp_exclude_format, bp_out] {
    action = [=] {
      return cmd_build_pretrain(*bp_common, *bp_n, *bp_min_dup, *bp_max_passes,
                                *bp_exclude, *bp_exclude_format, *bp_out);
    };
  });

  // build-finetune
  auto* bf = app.add_subcommand("build-finetune",
                                "sliding-window fine-tuning benchmarks per dup bucket");
  auto bf_common = std::make_shared<BuildCommon>();
  add_build_common(bf, *bf_common);
  auto bf_n = std::make_shared<std::uint64_t>(1000);
  auto bf_stride = std::make_shared<std::size_t>(50);
  auto bf_out_prefix = std::make_shared<std::string>();
  bf->add_option("--n-per-bucket", *bf_n, "samples per duplication bucket")
      ->capture_default_str();
  bf->add_option("--stride", *bf_stride, "sliding-window stride")->capture_default_str();
  bf->add_option("--out-prefix", *bf_out_prefix,
                 "output prefix; writes <prefix>.<bucket>.jsonl")
      ->required();
  bf->callback([&action, bf_common, bf_n, bf_stride, bf_out_prefix] {
    action = [=] {
      return cmd_build_finetune(*bf_common, *bf_n, *bf_stride, *bf_out_prefix);
    };
  });

  // dupcount
  auto* dc = app.add_subcommand("dupcount", "duplication-rate report over a corpus");
  auto dc_common = std::make_shared<BuildCommon>();
  add_build_common(dc, *dc_common);
  auto dc_window = std::make_shared<std::size_t>(300);
  auto dc_count_only = std::make_shared<bool>(false);
  auto dc_format = std::make_shared<std::string>("text");
  auto dc_out = std::make_shared<std::string>();
  dc->add_option("--window-len", *dc_window, "window length in tokens")
      ->capture_default_str();
  dc->add_flag("--count-only", *dc_count_only,
               "use the streaming count table (no position list)");
  dc->add_option("--format", *dc_format, "output format")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();
  dc->add_option("--out", *dc_out, "output path (default stdout)");
  dc->callback([&action, dc_common, dc_window, dc_count_only, dc_format, dc_out] {
    action = [=] {
      return cmd_dupcount(*dc_common, *dc_window, *dc_count_only, *dc_format, *dc_out);
    };
  });

  // attack
  auto* at = app.add_subcommand("attack", "run the extraction game against an endpoint");
  auto at_bench = std::make_shared<std::string>();
  auto at_endpoint = std::make_shared<std::string>();
  auto at_model = std::make_shared<std::string>("model");
  auto at_prefix_len = std::make_shared<std::size_t>(100);
  auto at_comparison = std::make_shared<std::string>("token_level");
  auto at_truncate = std::make_shared<std::string>("last");
  auto at_parallelism = std::make_shared<unsigned>(4);
  auto at_timeout = std::make_shared<int>(30000);
  auto at_retries = std::make_shared<int>(3);
  auto at_label = std::make_shared<std::string>();
  auto at_tok = std::make_shared<TokenizerOptions>();
  auto at_out = std::make_shared<std::string>();
  auto at_resume = std::make_shared<bool>(false);
  at->add_option("--bench", *at_bench, "benchmark JSONL")->required();
  at->add_option("--endpoint", *at_endpoint, "completion endpoint base url")
      ->envname("EXTRACTAUDIT_ENDPOINT")
      ->required();
  at->add_option("--model", *at_model, "model name sent in requests")
      ->capture_default_str();
  at->add_option("--prefix-len", *at_prefix_len, "attack prefix length in tokens")
      ->capture_default_str();
  at->add_option("--comparison", *at_comparison, "win condition")
      ->check(CLI::IsMember({"token_level", "string_level"}))
      ->capture_default_str();
  at->add_option("--truncate", *at_truncate, "prefix truncation mode")
      ->check(CLI::IsMember({"last", "first"}))
      ->capture_default_str();
  at->add_option("--parallelism", *at_parallelism, "concurrent in-flight requests")
      ->capture_default_str();
  at->add_option("--timeout-ms", *at_timeout, "per-request timeout")->capture_default_str();
  at->add_option("--max-retries", *at_retries, "transport retry budget")
      ->capture_default_str();
  at->add_option("--run-label", *at_label, "label recorded with the run (model/epoch)");
  add_tokenizer_options(at, *at_tok);
  at->add_option("--out", *at_out, "output run JSONL")->required();
  at->add_flag("--resume", *at_resume, "re-query only missing or error-marked samples");
  at->callback([&action, at_bench, at_endpoint, at_model, at_prefix_len, at_comparison,
                at_truncate, at_parallelism, at_timeout, at_retries, at_label, at_tok,
                at_out, at_resume] {
    action = [=] {
      return cmd_attack(*at_bench, *at_endpoint, *at_model, *at_prefix_len, *at_comparison,
                        *at_truncate, *at_parallelism, *at_timeout, *at_retries, *at_label,
                        *at_tok, *at_out, *at_resume);
    };
  });

  // score
  auto* sc = app.add_subcommand("score", "re-score a run under a different comparison");
  auto sc_run = std::make_shared<std::string>();
  auto sc_bench = std::make_shared<std::string>();
  auto sc_comparison = std::make_shared<std::string>("string_level");
  auto sc_tok = std::make_shared<TokenizerOptions>();
  auto sc_out = std::make_shared<std::string>();
  sc->add_option("--run", *sc_run, "attack run JSONL")->required();
  sc->add_option("--bench", *sc_bench, "benchmark the run was produced from")->required();
  sc->add_option("--comparison", *sc_comparison, "win condition")
      ->check(CLI::IsMember({"token_level", "string_level"}))
      ->capture_default_str();
  add_tokenizer_options(sc, *sc_tok);
  sc->add_option("--out", *sc_out, "output run JSONL")->required();
  sc->callback([&action, sc_run, sc_bench, sc_comparison, sc_tok, sc_out] {
    action = [=] {
      return cmd_score(*sc_run, *sc_bench, *sc_comparison, *sc_tok, *sc_out);
    };
  });

  // report
  auto* rp = app.add_subcommand("report", "aggregate runs into a rate table");
  auto rp_runs = std::make_shared<std::vector<std::string>>();
  auto rp_group = std::make_shared<std::string>("run_label");
  auto rp_baseline = std::make_shared<std::string>();
  auto rp_labels = std::make_shared<std::string>();
  auto rp_format = std::make_shared<std::string>("csv");
  auto rp_out = std::make_shared<std::string>();
  rp->add_option("--runs", *rp_runs, "attack run JSONL files")->required()->expected(-1);
  rp->add_option("--group-by", *rp_group,
                 "comma-separated keys: run_label,prefix_len,bucket,category")
      ->capture_default_str();
  rp->add_option("--baseline", *rp_baseline,
                 "baseline row key, e.g. run_label=epoch0 (adds em_up/bleu_up)");
  rp->add_option("--labels", *rp_labels, "label CSV for category grouping");
  rp->add_option("--format", *rp_format, "output format")
      ->check(CLI::IsMember({"csv", "json", "text"}))
      ->capture_default_str();
  rp->add_option("--out", *rp_out, "output path (default stdout)");
  rp->callback([&action, rp_runs, rp_group, rp_baseline, rp_labels, rp_format, rp_out] {
    action = [=] {
      return cmd_report(*rp_runs, *rp_group, *rp_baseline, *rp_labels, *rp_format, *rp_out);
    };
  });

  // kappa
  auto* kp = app.add_subcommand("kappa", "inter-annotator agreement from two label CSVs");
  auto kp_a = std::make_shared<std::string>();
  auto kp_b = std::make_shared<std::string>();
  auto kp_format = std::make_shared<std::string>("text");
  auto kp_out = std::make_shared<std::string>();
  kp->add_option("labels_a", *kp_a, "first annotator's CSV")->required();
  kp->add_option("labels_b", *kp_b, "second annotator's CSV")->required();
  kp->add_option("--format", *kp_format, "output format")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();
  kp->add_option("--out", *kp_out, "output path (default stdout)");
  kp->callback([&action, kp_a, kp_b, kp_format, kp_out] {
    action = [=] { return cmd_kappa(*kp_a, *kp_b, *kp_format, *kp_out); };
  });

  // mock-serve
  auto* ms = app.add_subcommand(
      "mock-serve", "serve a deterministic mock memorizer over the wire protocol");
  auto ms_bench = std::make_shared<std::string>();
  auto ms_prob = std::make_shared<double>(1.0);
  auto ms_linear = std::make_shared<double>(0.0);
  auto ms_min_context = std::make_shared<std::size_t>(0);
  auto ms_seed = std::make_shared<std::uint64_t>(0);
  auto ms_host = std::make_shared<std::string>("127.0.0.1");
  auto ms_port = std::make_shared<int>(0);
  auto ms_tok = std::make_shared<TokenizerOptions>();
  ms->add_option("--bench", *ms_bench, "benchmark JSONL to plant as the store")->required();
  ms->add_option("--mem-prob", *ms_prob, "constant recall probability")
      ->capture_default_str();
  ms->add_option("--mem-prob-linear", *ms_linear,
                 "recall probability min(1, slope*dup_count); overrides --mem-prob");
  ms->add_option("--min-context", *ms_min_context, "minimum matched prefix tokens")
      ->capture_default_str();
  ms->add_option("--seed", *ms_seed, "recall hash seed")->capture_default_str();
  ms->add_option("--host", *ms_host, "bind host")->capture_default_str();
  ms->add_option("--port", *ms_port, "bind port (0 = ephemeral)")->capture_default_str();
  add_tokenizer_options(ms, *ms_tok);
  ms->callback([&action, ms_bench, ms_prob, ms_linear, ms_min_context, ms_seed, ms_host,
                ms_port, ms_tok] {
    action = [=] {
      return cmd_mock_serve(*ms_bench, *ms_prob, *ms_linear, *ms_min_context, *ms_seed,
                            *ms_host, *ms_port, *ms_tok);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return action();
  } catch (const UnderfillError& e) {
    report_underfill(e);
    return kExitUnderfill;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
