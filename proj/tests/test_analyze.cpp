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

#include "extractaudit/analyze.hpp"

#include <doctest.h>

#include <algorithm>

#include "extractaudit/errors.hpp"
#include "extractaudit/rng.hpp"
#include "testutil.hpp"

using namespace extractaudit;

namespace {

AttackRun make_run(const std::string& label, std::size_t prefix_len,
                   const std::vector<int>& ems,
                   const std::vector<DupBucket>& buckets = {}) {
  AttackRun run;
  run.config.run_label = label;
  run.config.prefix_len = prefix_len;
  for (std::size_t i = 0; i < ems.size(); ++i) {
    AttackResult r;
    r.sample_id = label + ":" + std::to_string(i);
    r.em = ems[i];
    r.win = ems[i] == 1;
    r.bleu = ems[i] == 1 ? 1.0 : 0.25;
    r.meteor = ems[i] == 1 ? 1.0 : 0.25;
    r.rouge_l = ems[i] == 1 ? 1.0 : 0.25;
    r.bucket = buckets.empty() ? DupBucket::kD1 : buckets[i % buckets.size()];
    run.results.push_back(std::move(r));
  }
  return run;
}

std::vector<int> ems_with_rate(std::size_t n, std::size_t wins) {
  std::vector<int> out(n, 0);
  std::fill_n(out.begin(), wins, 1);
  return out;
}

}  // namespace

TEST_CASE("aggregate computes exact means") {
  SUBCASE("constant column") {
    const AttackRun run = make_run("r", 100, std::vector<int>(200, 1));
    const RateTable table = aggregate({run}, {GroupKey::kRunLabel});
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].n == 200);
    CHECK(table.rows[0].em_rate == 1.0);
  }
  SUBCASE("arithmetic mean") {
    const AttackRun run = make_run("r", 100, {1, 0, 0, 1});
    const RateTable table = aggregate({run}, {});
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].em_rate == 0.5);
  }
  SUBCASE("grouping by bucket partitions the results") {
    const AttackRun run =
        make_run("r", 100, ems_with_rate(40, 10),
                 {DupBucket::kD1, DupBucket::kD2, DupBucket::kD3, DupBucket::kDGt3});
    const RateTable table = aggregate({run}, {GroupKey::kBucket});
    REQUIRE(table.rows.size() == 4);
    std::uint64_t total = 0;
    for (const RateRow& row : table.rows) total += row.n;
    CHECK(total == 40);
  }
}

TEST_CASE("aggregate excludes error results with a count") {
  AttackRun run = make_run("r", 100, {1, 1, 1, 1});
  run.results[1].error = "transport: boom";
  const RateTable table = aggregate({run}, {});
  CHECK(table.rows[0].n == 3);
  CHECK(table.excluded_errors == 1);
  // Sum of per-bucket n equals total non-error results.
  const RateTable by_bucket = aggregate({run}, {GroupKey::kBucket});
  std::uint64_t total = 0;
  for (const RateRow& row : by_bucket.rows) total += row.n;
  CHECK(total == 3);
}

TEST_CASE("aggregate is permutation invariant") {
  SeededRng rng(70);
  std::vector<int> ems;
  for (int i = 0; i < 101; ++i) ems.push_back(static_cast<int>(rng.below(2)));
  AttackRun run = make_run("r", 100, ems);
  for (auto& r : run.results) r.bleu = static_cast<double>(rng.below(1000)) / 1000.0;
  AttackRun shuffled = run;
  rng.shuffle(shuffled.results);
  const RateTable a = aggregate({run}, {GroupKey::kRunLabel});
  const RateTable b = aggregate({shuffled}, {GroupKey::kRunLabel});
  CHECK(a.rows[0].em_rate == b.rows[0].em_rate);
  CHECK(a.rows[0].bleu_mean == b.rows[0].bleu_mean);
}

TEST_CASE("aggregate rejects empty input and empty groups") {
  CHECK_THROWS_AS(aggregate({}, {}), UsageError);
  AttackRun run = make_run("r", 100, {1});
  run.results[0].error = "x";
  CHECK_THROWS_AS(aggregate({run}, {}), Error);
}

TEST_CASE("delta_vs_baseline reproduces the published epoch deltas") {
  // 0.459 - 0.263 = 0.196 and 0.631 - 0.263 = 0.368 over n = 1000.
  const AttackRun base = make_run("epoch0", 100, ems_with_rate(1000, 263));
  const AttackRun ep1 = make_run("epoch1", 100, ems_with_rate(1000, 459));
  const AttackRun ep3 = make_run("epoch3", 100, ems_with_rate(1000, 631));
  RateTable table = aggregate({base, ep1, ep3}, {GroupKey::kRunLabel});
  table = delta_vs_baseline(std::move(table), baseline_key_from_string("run_label=epoch0"));
  REQUIRE(table.rows.size() == 3);
  CHECK(table.rows[0].run_label == "epoch0");
  CHECK_FALSE(table.rows[0].em_up.has_value());  // baseline deltas stay empty
  CHECK(*table.rows[1].em_up == doctest::Approx(0.196).epsilon(1e-12));
  CHECK(*table.rows[2].em_up == doctest::Approx(0.368).epsilon(1e-12));
  CHECK(*table.rows[1].em_up == 0.459 - 0.263);  // same double arithmetic
  CHECK(*table.rows[2].em_up == 0.631 - 0.263);
}

TEST_CASE("delta_vs_baseline yields zero against itself and validates the key") {
  const AttackRun run = make_run("only", 100, ems_with_rate(10, 5));
  RateTable table = aggregate({run, make_run("b", 100, ems_with_rate(10, 5))},
                              {GroupKey::kRunLabel});
  RateTable with = delta_vs_baseline(table, baseline_key_from_string("run_label=only"));
  for (const RateRow& row : with.rows) {
    if (row.run_label == "only") continue;
    CHECK(*row.em_up == 0.0);
    CHECK(*row.bleu_up == 0.0);
  }
  CHECK_THROWS_AS(delta_vs_baseline(table, baseline_key_from_string("run_label=absent")),
                  UsageError);
  CHECK_THROWS_AS(delta_vs_baseline(table, BaselineKey{}), UsageError);  // ambiguous
}

TEST_CASE("cohens kappa on the worked four-sample example") {
  // A = [Code, Code, Docs, License], B = [Code, Docs, Docs, License]:
  // p_o = 3/4; marginals A: Code 2, Docs 1, License 1; B: Code 1, Docs 2,
  // License 1; p_e = (2*1 + 1*2 + 1*1)/16 = 0.3125;
  // kappa = (0.75 - 0.3125)/0.6875 = 0.63636...
  std::vector<LabelRecord> a = {{"s1", "a", Category::kCode},
                                {"s2", "a", Category::kCode},
                                {"s3", "a", Category::kDocs},
                                {"s4", "a", Category::kLicense}};
  std::vector<LabelRecord> b = {{"s1", "b", Category::kCode},
                                {"s2", "b", Category::kDocs},
                                {"s3", "b", Category::kDocs},
                                {"s4", "b", Category::kLicense}};
  const KappaResult result = cohens_kappa(a, b);
  CHECK(result.p_o == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(result.p_e == doctest::Approx(0.3125).epsilon(1e-12));
  CHECK(result.kappa == doctest::Approx(0.6364).epsilon(1e-4));
  // Confusion row/column sums equal the per-annotator counts.
  std::uint64_t row_code = 0, col_docs = 0;
  for (std::size_t j = 0; j < kCategoryCount; ++j) {
    row_code += result.confusion[static_cast<std::size_t>(Category::kCode)][j];
    col_docs += result.confusion[j][static_cast<std::size_t>(Category::kDocs)];
  }
  CHECK(row_code == 2);
  CHECK(col_docs == 2);

  const auto agreed = filter_agreed(a, b);
  REQUIRE(agreed.size() == 3);
  CHECK(agreed[0].first == "s1");
  CHECK(agreed[1].first == "s3");
  CHECK(agreed[2].first == "s4");
}

TEST_CASE("kappa of a labeling with itself is 1") {
  SeededRng rng(71);
  std::vector<LabelRecord> a, b;
  for (int i = 0; i < 100; ++i) {
    const auto c = static_cast<Category>(rng.below(kCategoryCount));
    a.push_back({"s" + std::to_string(i), "a", c});
    b.push_back({"s" + std::to_string(i), "b", c});
  }
  const KappaResult result = cohens_kappa(a, b);
  CHECK(result.kappa == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(filter_agreed(a, b).size() == 100);
}

TEST_CASE("kappa of independent random labels is near zero") {
  SeededRng rng(72);
  std::vector<LabelRecord> a, b;
  for (int i = 0; i < 10000; ++i) {
    a.push_back({"s" + std::to_string(i), "a",
                 static_cast<Category>(rng.below(kCategoryCount))});
    b.push_back({"s" + std::to_string(i), "b",
                 static_cast<Category>(rng.below(kCategoryCount))});
  }
  const KappaResult result = cohens_kappa(a, b);
  CHECK(std::abs(result.kappa) < 0.05);
}

TEST_CASE("kappa stays in [-1, 1] under fuzzing") {
  SeededRng rng(73);
  for (int round = 0; round < 50; ++round) {
    std::vector<LabelRecord> a, b;
    const std::size_t n = 1 + rng.below(40);
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back({"s" + std::to_string(i), "a",
                   static_cast<Category>(rng.below(kCategoryCount))});
      b.push_back({"s" + std::to_string(i), "b",
                   static_cast<Category>(rng.below(kCategoryCount))});
    }
    const KappaResult result = cohens_kappa(a, b);
    CHECK(result.kappa >= -1.0 - 1e-12);
    CHECK(result.kappa <= 1.0 + 1e-12);
  }
}

TEST_CASE("kappa rejects mismatched sample sets with a symmetric difference") {
  std::vector<LabelRecord> a = {{"s1", "a", Category::kCode}, {"s2", "a", Category::kCode}};
  std::vector<LabelRecord> b = {{"s1", "b", Category::kCode}, {"s3", "b", Category::kCode}};
  CHECK_THROWS_WITH_AS(cohens_kappa(a, b), doctest::Contains("only-in-a"), UsageError);
  CHECK_THROWS_WITH_AS(cohens_kappa(a, b), doctest::Contains("s3"), UsageError);
  // Zero agreement yields an empty list.
  std::vector<LabelRecord> c = {{"s1", "c", Category::kDocs}, {"s2", "c", Category::kDicts}};
  CHECK(filter_agreed(a, c).empty());
  // Duplicate (sample, annotator) labels are invalid.
  std::vector<LabelRecord> dup = {{"s1", "a", Category::kCode},
                                  {"s1", "a", Category::kDocs}};
  CHECK_THROWS_AS(cohens_kappa(dup, dup), UsageError);
}

TEST_CASE("heuristic prelabel applies its rules in order") {
  CHECK(heuristic_prelabel("/* Apache License, Version 2.0 */\nclass A {}").category ==
        Category::kLicense);
  CHECK(heuristic_prelabel("@Test void shouldWork() { assertEquals(1, 1); }").category ==
        Category::kTesting);
  const std::string dict =
      "String[] table = {\"alpha\",\"beta\",\"gamma\",\"delta\",\"epsilon\"};";
  CHECK(heuristic_prelabel(dict).category == Category::kDicts);
  std::string docs;
  for (int i = 0; i < 9; ++i) docs += "// explains the protocol in detail\n";
  docs += "int version;\n";
  CHECK(heuristic_prelabel(docs).category == Category::kDocs);
  CHECK(heuristic_prelabel("int add(int a, int b) { return a + b; }").category ==
        Category::kCode);
  // Confidence is reported and positive.
  CHECK(heuristic_prelabel(dict).confidence > 0.4);
}

TEST_CASE("label csv loads and validates") {
  testutil::TempDir dir;
  testutil::write_text(dir.file("labels.csv"),
                       "sample_id,annotator_id,category\n"
                       "s1,alice,Code\n"
                       "s1,bob,Docs\n"
                       "s2,alice,License\n"
                       "s2,bob,License\n");
  const auto labels = load_labels_csv(dir.file("labels.csv"));
  REQUIRE(labels.size() == 4);
  CHECK(labels[0].sample_id == "s1");
  CHECK(labels[0].annotator_id == "alice");
  CHECK(labels[0].category == Category::kCode);
  CHECK_THROWS_AS(load_single_annotator_csv(dir.file("labels.csv")), UsageError);

  testutil::write_text(dir.file("bad.csv"), "wrong,header,here\n");
  CHECK_THROWS_AS(load_labels_csv(dir.file("bad.csv")), FormatError);
  testutil::write_text(dir.file("badcat.csv"),
                       "sample_id,annotator_id,category\ns1,a,Nonsense\n");
  CHECK_THROWS_AS(load_labels_csv(dir.file("badcat.csv")), UsageError);
}

TEST_CASE("rate table renders csv, json, and text deterministically") {
  const AttackRun a = make_run("a", 100, ems_with_rate(4, 2));
  const AttackRun b = make_run("b", 150, ems_with_rate(4, 3));
  RateTable table = aggregate({a, b}, {GroupKey::kRunLabel, GroupKey::kPrefixLen});
  const std::string csv = render_rate_table(table, ReportFormat::kCsv);
  CHECK(csv ==
        "run_label,prefix_len,bucket,category,n,em_rate,bleu_mean,meteor_mean,rouge_l_mean\n"
        "a,100,,,4,0.5,0.625,0.625,0.625\n"
        "b,150,,,4,0.75,0.8125,0.8125,0.8125\n");
  const std::string json_out = render_rate_table(table, ReportFormat::kJson);
  const auto parsed = nlohmann::json::parse(json_out);
  CHECK(parsed["rows"].size() == 2);
  CHECK(parsed["rows"][0]["em_rate"] == 0.5);
  const std::string text = render_rate_table(table, ReportFormat::kText);
  CHECK(text.find("run_label") != std::string::npos);
  // Deltas add the two extra columns.
  table = delta_vs_baseline(std::move(table), baseline_key_from_string("run_label=a"));
  const std::string csv2 = render_rate_table(table, ReportFormat::kCsv);
  CHECK(csv2.find("em_up,bleu_up") != std::string::npos);
  CHECK(csv2.find("a,100,,,4,0.5,0.625,0.625,0.625,,\n") != std::string::npos);
}
