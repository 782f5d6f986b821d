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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "extractaudit/attack.hpp"

namespace extractaudit {

enum class Category { kCode, kDicts, kDocs, kLicense, kTesting };
inline constexpr std::size_t kCategoryCount = 5;
const char* category_name(Category c);
Category category_from_name(std::string_view name);

struct LabelRecord {
  std::string sample_id;
  std::string annotator_id;
  Category category = Category::kCode;
};

enum class GroupKey { kRunLabel, kPrefixLen, kBucket, kCategory };
GroupKey group_key_from_name(std::string_view name);

struct RateRow {
  std::string run_label;                // empty when not grouped
  std::optional<int> prefix_len;
  std::optional<DupBucket> bucket;
  std::optional<Category> category;
  std::uint64_t n = 0;
  double em_rate = 0.0;
  double bleu_mean = 0.0;
  double meteor_mean = 0.0;
  double rouge_l_mean = 0.0;
  std::optional<double> em_up;    // filled by delta_vs_baseline
  std::optional<double> bleu_up;  // empty on the baseline row
};

struct RateTable {
  std::vector<RateRow> rows;  // deterministic order: lexicographic by key
  std::uint64_t excluded_errors = 0;
  std::uint64_t excluded_unlabeled = 0;  // only when grouping by category
  bool has_deltas = false;
};

// Groups the non-error results of the given runs by the requested keys and
// computes exact means per group. Error-marked results are excluded and
// counted. `labels` maps sample_id -> category and is required when grouping
// by category; unlabeled samples are excluded and counted.
RateTable aggregate(const std::vector<AttackRun>& runs, const std::vector<GroupKey>& by,
                    const std::map<std::string, Category>* labels = nullptr);

struct BaselineKey {
  std::optional<std::string> run_label;
  std::optional<int> prefix_len;
  std::optional<DupBucket> bucket;
  std::optional<Category> category;
};

// Parses "run_label=base,prefix_len=100" style key selectors.
BaselineKey baseline_key_from_string(std::string_view s);

// Adds em_up / bleu_up columns: absolute rate difference against the unique
// row matched by `key`. The baseline row's deltas stay empty. Throws if no
// row (or more than one) matches.
RateTable delta_vs_baseline(RateTable table, const BaselineKey& key);

struct KappaResult {
  double kappa = 0.0;
  double p_o = 0.0;
  double p_e = 0.0;
  // confusion[a][b]: counts with annotator A's category as the row.
  std::array<std::array<std::uint64_t, kCategoryCount>, kCategoryCount> confusion{};
};

// Cohen's kappa over two annotators' labels of the same sample set. Throws
// with the symmetric difference listed if the sample sets disagree.
KappaResult cohens_kappa(const std::vector<LabelRecord>& labels_a,
                         const std::vector<LabelRecord>& labels_b);

// The samples both annotators agree on, with the agreed category; sorted by
// sample_id.
std::vector<std::pair<std::string, Category>> filter_agreed(
    const std::vector<LabelRecord>& labels_a, const std::vector<LabelRecord>& labels_b);

struct Prelabel {
  Category category = Category::kCode;
  double confidence = 0.0;
};

// Rule-based category suggestion: license keywords, then test markers, then
// string/numeric literal density, then comment-majority content, else Code.
// Assists the manual workflow; suggestions are never written into
// LabelRecords.
Prelabel heuristic_prelabel(const std::string& text);
Prelabel heuristic_prelabel(const AttackSample& sample, Tokenizer& tok);

// Label CSV: header "sample_id,annotator_id,category".
std::vector<LabelRecord> load_labels_csv(const std::filesystem::path& path);

// Expects exactly one annotator in each file.
std::vector<LabelRecord> load_single_annotator_csv(const std::filesystem::path& path);

enum class ReportFormat { kCsv, kJson, kText };
ReportFormat report_format_from_name(std::string_view name);

// CSV is the canonical format; column order is fixed:
// run_label,prefix_len,bucket,category,n,em_rate,bleu_mean,meteor_mean,
// rouge_l_mean[,em_up,bleu_up].
std::string render_rate_table(const RateTable& table, ReportFormat format);

std::string render_kappa(const KappaResult& result, ReportFormat format);

}  // namespace extractaudit
