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

#include <doctest.h>

#include <fstream>

#include "extractaudit/attack.hpp"
#include "extractaudit/bench.hpp"
#include "extractaudit/mock_memorizer.hpp"
#include "testutil.hpp"

using namespace extractaudit;
using testutil::CliResult;
using testutil::run_cli;
using testutil::TempDir;

namespace {

// Shared planted corpus + served mock for the CLI round trips.
struct CliFixture {
  TempDir dir;
  testutil::PlantedCorpus planted;
  std::shared_ptr<MockMemorizer> mock;
  std::unique_ptr<MockServer> server;
  std::string endpoint;
  std::string bench_path;

  CliFixture() : planted(testutil::make_planted_corpus(dir, 300, {{30, 4}}, 300)) {
    bench_path = dir.file("bench.jsonl").string();
    const CliResult build = run_cli({"build-pretrain", "--corpus", planted.jsonl_path.string(),
                                     "--corpus-format", "jsonl", "--n", "25", "--seed", "4",
                                     "--out", bench_path});
    REQUIRE(build.exit_code == 0);
    const BenchmarkSet bench = load_benchmark(bench_path);
    auto tok = std::shared_ptr<Tokenizer>(make_tokenizer(TokenizerSpec::byte()));
    mock = std::make_shared<MockMemorizer>(store_from_benchmark(bench),
                                           MemProbability::constant_p(1.0), 0, 1, tok);
    server = std::make_unique<MockServer>(mock);
    const int port = server->start("127.0.0.1", 0);
    endpoint = "http://127.0.0.1:" + std::to_string(port);
  }
};

}  // namespace

TEST_CASE("cli: unknown flags exit 1, help exits 0") {
  CHECK(run_cli({"--help"}).exit_code == 0);
  CHECK(run_cli({"report", "--help"}).exit_code == 0);
  CHECK(run_cli({"--no-such-flag"}).exit_code == 1);
  CHECK(run_cli({"no-such-subcommand"}).exit_code == 1);
  CHECK(run_cli({}).exit_code == 1);  // a subcommand is required
  CHECK(run_cli({"kappa", "/nonexistent/a.csv", "/nonexistent/b.csv"}).exit_code == 2);
}

TEST_CASE("cli: build-pretrain underfill exits 3 with per-reason counts") {
  TempDir dir;
  const auto planted = testutil::make_planted_corpus(dir, 301, {{10, 1}}, 300);
  const CliResult res =
      run_cli({"build-pretrain", "--corpus", planted.jsonl_path.string(), "--corpus-format",
               "jsonl", "--n", "5", "--out", dir.file("b.jsonl").string()});
  CHECK(res.exit_code == 3);
  CHECK(res.err.find("underfill") != std::string::npos);
  CHECK(res.err.find("rejected_dup_below_threshold") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir.file("b.jsonl")));
}

TEST_CASE("cli: attack, resume, score, and report round trip") {
  CliFixture fx;
  const std::string run_path = fx.dir.file("run.jsonl").string();
  const CliResult attack =
      run_cli({"attack", "--bench", fx.bench_path, "--endpoint", fx.endpoint, "--prefix-len",
               "100", "--run-label", "ep1", "--parallelism", "4", "--out", run_path});
  CHECK(attack.exit_code == 0);
  CHECK(attack.out.find("25 results") != std::string::npos);
  CHECK(attack.out.find("25 wins") != std::string::npos);

  // Interrupt simulation: drop the last 10 result lines, then resume.
  {
    const std::string full = read_file(run_path);
    std::vector<std::string> lines;
    std::istringstream in(full);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 26);  // manifest + 25 results
    std::ostringstream truncated;
    for (std::size_t i = 0; i + 10 < lines.size(); ++i) truncated << lines[i] << '\n';
    // Plus a half-written record, as an interrupted writer would leave.
    truncated << R"({"sample_id":"pt:cut)";
    testutil::write_text(run_path, truncated.str());
  }
  const CliResult resume =
      run_cli({"attack", "--bench", fx.bench_path, "--endpoint", fx.endpoint, "--prefix-len",
               "100", "--run-label", "ep1", "--resume", "--out", run_path});
  CHECK(resume.exit_code == 0);
  const AttackRun resumed = load_attack_run(run_path);
  CHECK(resumed.results.size() == 25);
  for (const auto& r : resumed.results) CHECK(r.error.empty());

  // Re-score under string-level comparison.
  const std::string rescored_path = fx.dir.file("rescored.jsonl").string();
  const CliResult rescore = run_cli({"score", "--run", run_path, "--bench", fx.bench_path,
                                     "--comparison", "string_level", "--out", rescored_path});
  CHECK(rescore.exit_code == 0);
  const AttackRun rescored = load_attack_run(rescored_path);
  for (const auto& r : rescored.results) {
    CHECK(r.em == r.em_string);
    CHECK(r.win);
  }

  // Report over a prefix sweep: one row per prefix length.
  std::vector<std::string> report_args = {"report", "--group-by", "prefix_len", "--format",
                                          "csv", "--runs"};
  for (int prefix_len : {100, 150, 200, 250}) {
    const std::string sweep_path =
        fx.dir.file("run" + std::to_string(prefix_len) + ".jsonl").string();
    const CliResult sweep = run_cli({"attack", "--bench", fx.bench_path, "--endpoint",
                                     fx.endpoint, "--prefix-len", std::to_string(prefix_len),
                                     "--run-label", "sweep", "--out", sweep_path});
    REQUIRE(sweep.exit_code == 0);
    report_args.push_back(sweep_path);
  }
  const CliResult report = run_cli(report_args);
  CHECK(report.exit_code == 0);
  std::size_t rows = 0;
  std::istringstream in(report.out);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 5);  // header + 4 prefix lengths
}

TEST_CASE("cli: kappa subcommand") {
  TempDir dir;
  testutil::write_text(dir.file("a.csv"),
                       "sample_id,annotator_id,category\n"
                       "s1,a,Code\ns2,a,Code\ns3,a,Docs\ns4,a,License\n");
  testutil::write_text(dir.file("b.csv"),
                       "sample_id,annotator_id,category\n"
                       "s1,b,Code\ns2,b,Docs\ns3,b,Docs\ns4,b,License\n");
  const CliResult res =
      run_cli({"kappa", dir.file("a.csv").string(), dir.file("b.csv").string()});
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("kappa=0.6364") != std::string::npos);
  const CliResult json_res = run_cli({"kappa", dir.file("a.csv").string(),
                                      dir.file("b.csv").string(), "--format", "json"});
  CHECK(json_res.exit_code == 0);
  const auto parsed = nlohmann::json::parse(json_res.out);
  CHECK(parsed["kappa"].get<double>() == doctest::Approx(0.6364).epsilon(1e-4));
}

TEST_CASE("cli: dupcount reports the bucket histogram") {
  TempDir dir;
  const auto planted =
      testutil::make_planted_corpus(dir, 302, {{5, 1}, {3, 2}, {2, 4}}, 300);
  const CliResult res =
      run_cli({"dupcount", "--corpus", planted.jsonl_path.string(), "--corpus-format",
               "jsonl", "--window-len", "300", "--format", "json"});
  CHECK(res.exit_code == 0);
  const auto parsed = nlohmann::json::parse(res.out);
  CHECK(parsed["distinct_by_bucket"]["d1"] == 5);
  CHECK(parsed["distinct_by_bucket"]["d2"] == 3);
  CHECK(parsed["distinct_by_bucket"]["dGt3"] == 2);
  CHECK(parsed["total_positions"] == 5 + 6 + 8);
  // The streaming count table agrees.
  const CliResult counted =
      run_cli({"dupcount", "--corpus", planted.jsonl_path.string(), "--corpus-format",
               "jsonl", "--window-len", "300", "--format", "json", "--count-only"});
  CHECK(counted.exit_code == 0);
  CHECK(nlohmann::json::parse(counted.out)["distinct_by_bucket"] ==
        parsed["distinct_by_bucket"]);
}

TEST_CASE("cli: build-finetune writes one benchmark per bucket") {
  TempDir dir;
  const auto planted = testutil::make_planted_corpus(
      dir, 303, {{6, 1}, {6, 2}, {6, 3}, {6, 4}}, 300);
  const std::string prefix = dir.file("ft").string();
  const CliResult res =
      run_cli({"build-finetune", "--corpus", planted.jsonl_path.string(), "--corpus-format",
               "jsonl", "--n-per-bucket", "5", "--seed", "8", "--out-prefix", prefix});
  CHECK(res.exit_code == 0);
  for (const char* bucket : {"d1", "d2", "d3", "dGt3"}) {
    const std::string path = prefix + "." + bucket + ".jsonl";
    REQUIRE(std::filesystem::exists(path));
    const BenchmarkSet bench = load_benchmark(path);
    CHECK(bench.samples.size() == 5);
    CHECK(bench.manifest["bucket"] == bucket);
  }
}

TEST_CASE("cli: mock-serve rejects an unusable bind address") {
  CliFixture fx;
  const CliResult res = run_cli({"mock-serve", "--bench", fx.bench_path, "--host",
                                 "255.255.255.255", "--port", "1"});
  CHECK(res.exit_code == 2);
}

TEST_CASE("cli: config file supplies defaults, flags win") {
  TempDir dir;
  const auto planted = testutil::make_planted_corpus(dir, 304, {{12, 4}}, 300);
  testutil::write_text(dir.file("cfg.toml"),
                       "[build-pretrain]\n"
                       "n=7\n"
                       "seed=9\n");
  const std::string out = dir.file("bench.jsonl").string();
  const CliResult res =
      run_cli({"--config", dir.file("cfg.toml").string(), "build-pretrain", "--corpus",
               planted.jsonl_path.string(), "--corpus-format", "jsonl", "--out", out});
  REQUIRE(res.exit_code == 0);
  CHECK(load_benchmark(out).samples.size() == 7);
  // An explicit flag overrides the config file.
  const CliResult flagged =
      run_cli({"--config", dir.file("cfg.toml").string(), "build-pretrain", "--corpus",
               planted.jsonl_path.string(), "--corpus-format", "jsonl", "--n", "3", "--out",
               out});
  REQUIRE(flagged.exit_code == 0);
  CHECK(load_benchmark(out).samples.size() == 3);
}

TEST_CASE("cli: rejection log lands at the requested path") {
  TempDir dir;
  testutil::write_text(dir.file("corpus/ok.java"), "class Ok { int f() { return 2; } }\n");
  testutil::write_text(dir.file("corpus/gen.java"), "// DO NOT EDIT\nclass G {}\n");
  const CliResult res = run_cli(
      {"dupcount", "--corpus", dir.file("corpus").string(), "--window-len", "4",
       "--rejected-out", dir.file("rejected.jsonl").string()});
  CHECK(res.exit_code == 0);
  const std::string log = read_file(dir.file("rejected.jsonl"));
  CHECK(log.find("gen.java") != std::string::npos);
  CHECK(log.find("autogenerated") != std::string::npos);
}
