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

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "extractaudit/errors.hpp"

namespace extractaudit {

const char* category_name(Category c) {
  switch (c) {
    case Category::kCode:
      return "Code";
    case Category::kDicts:
      return "Dicts";
    case Category::kDocs:
      return "Docs";
    case Category::kLicense:
      return "License";
    case Category::kTesting:
      return "Testing";
  }
  return "?";
}

Category category_from_name(std::string_view name) {
  if (name == "Code") return Category::kCode;
  if (name == "Dicts") return Category::kDicts;
  if (name == "Docs") return Category::kDocs;
  if (name == "License") return Category::kLicense;
  if (name == "Testing") return Category::kTesting;
  throw UsageError("unknown category: " + std::string(name));
}

GroupKey group_key_from_name(std::string_view name) {
  if (name == "run_label") return GroupKey::kRunLabel;
  if (name == "prefix_len") return GroupKey::kPrefixLen;
  if (name == "bucket") return GroupKey::kBucket;
  if (name == "category") return GroupKey::kCategory;
  throw UsageError("unknown group-by key: " + std::string(name));
}

namespace {

// Row key; -1 in the int fields means "not grouped by this key".
struct RowKey {
  std::string run_label;
  int prefix_len = -1;
  int bucket = -1;
  int category = -1;

  friend bool operator<(const RowKey& a, const RowKey& b) {
    return std::tie(a.run_label, a.prefix_len, a.bucket, a.category) <
           std::tie(b.run_label, b.prefix_len, b.bucket, b.category);
  }
};

struct Accum {
  std::uint64_t n = 0;
  std::uint64_t em_sum = 0;
  double bleu_sum = 0.0;
  double meteor_sum = 0.0;
  double rouge_sum = 0.0;
};

}  // namespace

RateTable aggregate(const std::vector<AttackRun>& runs, const std::vector<GroupKey>& by,
                    const std::map<std::string, Category>* labels) {
  if (runs.empty()) throw UsageError("aggregate: no runs given");
  bool by_label = false, by_prefix = false, by_bucket = false, by_category = false;
  for (GroupKey k : by) {
    switch (k) {
      case GroupKey::kRunLabel:
        by_label = true;
        break;
      case GroupKey::kPrefixLen:
        by_prefix = true;
        break;
      case GroupKey::kBucket:
        by_bucket = true;
        break;
      case GroupKey::kCategory:
        by_category = true;
        break;
    }
  }
  if (by_category && labels == nullptr) {
    throw UsageError("grouping by category requires labels");
  }

  RateTable table;
  std::map<RowKey, Accum> groups;
  for (const AttackRun& run : runs) {
    for (const AttackResult& r : run.results) {
      if (!r.error.empty()) {
        ++table.excluded_errors;
        continue;
      }
      RowKey key;
      if (by_label) key.run_label = run.config.run_label;
      if (by_prefix) key.prefix_len = static_cast<int>(run.config.prefix_len);
      if (by_bucket) key.bucket = static_cast<int>(r.bucket);
      if (by_category) {
        auto it = labels->find(r.sample_id);
        if (it == labels->end()) {
          ++table.excluded_unlabeled;
          continue;
        }
        key.category = static_cast<int>(it->second);
      }
      Accum& a = groups[key];
      ++a.n;
      a.em_sum += static_cast<std::uint64_t>(r.em);
      a.bleu_sum += r.bleu;
      a.meteor_sum += r.meteor;
      a.rouge_sum += r.rouge_l;
    }
  }
  if (groups.empty()) {
    throw Error("aggregate: empty group (no scoreable results)");
  }
  for (const auto& [key, a] : groups) {
    RateRow row;
    row.run_label = key.run_label;
    if (key.prefix_len >= 0) row.prefix_len = key.prefix_len;
    if (key.bucket >= 0) row.bucket = static_cast<DupBucket>(key.bucket);
    if (key.category >= 0) row.category = static_cast<Category>(key.category);
    row.n = a.n;
    row.em_rate = static_cast<double>(a.em_sum) / static_cast<double>(a.n);
    row.bleu_mean = a.bleu_sum / static_cast<double>(a.n);
    row.meteor_mean = a.meteor_sum / static_cast<double>(a.n);
    row.rouge_l_mean = a.rouge_sum / static_cast<double>(a.n);
    table.rows.push_back(std::move(row));
  }
  return table;
}

BaselineKey baseline_key_from_string(std::string_view s) {
  BaselineKey key;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t end = s.find(',', pos);
    if (end == std::string_view::npos) end = s.size();
    const std::string_view part = s.substr(pos, end - pos);
    const std::size_t eq = part.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("baseline key parts must look like name=value: " + std::string(part));
    }
    const std::string_view name = part.substr(0, eq);
    const std::string value(part.substr(eq + 1));
    if (name == "run_label") {
      key.run_label = value;
    } else if (name == "prefix_len") {
      key.prefix_len = std::stoi(value);
    } else if (name == "bucket") {
      key.bucket = bucket_from_name(value);
    } else if (name == "category") {
      key.category = category_from_name(value);
    } else {
      throw UsageError("unknown baseline key field: " + std::string(name));
    }
    pos = end + 1;
  }
  return key;
}

RateTable delta_vs_baseline(RateTable table, const BaselineKey& key) {
  const RateRow* baseline = nullptr;
  for (const RateRow& row : table.rows) {
    if (key.run_label && row.run_label != *key.run_label) continue;
    if (key.prefix_len && row.prefix_len != key.prefix_len) continue;
    if (key.bucket && row.bucket != key.bucket) continue;
    if (key.category && row.category != key.category) continue;
    if (baseline != nullptr) throw UsageError("baseline key matches more than one row");
    baseline = &row;
  }
  if (baseline == nullptr) throw UsageError("baseline row not found");
  const double base_em = baseline->em_rate;
  const double base_bleu = baseline->bleu_mean;
  for (RateRow& row : table.rows) {
    if (&row == baseline) continue;  // the baseline row's deltas stay empty
    row.em_up = row.em_rate - base_em;
    row.bleu_up = row.bleu_mean - base_bleu;
  }
  table.has_deltas = true;
  return table;
}

namespace {

std::map<std::string, Category> labels_by_sample(const std::vector<LabelRecord>& labels,
                                                 const char* which) {
  std::map<std::string, Category> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const LabelRecord& l : labels) {
    if (!seen.insert({l.sample_id, l.annotator_id}).second) {
      throw UsageError(std::string(which) + ": duplicate label for sample " + l.sample_id +
                       " by annotator " + l.annotator_id);
    }
    out[l.sample_id] = l.category;
  }
  return out;
}

void require_same_samples(const std::map<std::string, Category>& a,
                          const std::map<std::string, Category>& b) {
  std::vector<std::string> only_a, only_b;
  for (const auto& [id, c] : a) {
    if (!b.count(id)) only_a.push_back(id);
  }
  for (const auto& [id, c] : b) {
    if (!a.count(id)) only_b.push_back(id);
  }
  if (only_a.empty() && only_b.empty()) return;
  std::string msg = "annotators labeled different sample sets;";
  auto list = [&msg](const char* tag, const std::vector<std::string>& ids) {
    if (ids.empty()) return;
    msg += std::string(" ") + tag + ":";
    for (std::size_t i = 0; i < ids.size() && i < 10; ++i) msg += " " + ids[i];
    if (ids.size() > 10) msg += " (+" + std::to_string(ids.size() - 10) + " more)";
  };
  list("only-in-a", only_a);
  list("only-in-b", only_b);
  throw UsageError(msg);
}

}  // namespace

KappaResult cohens_kappa(const std::vector<LabelRecord>& labels_a,
                         const std::vector<LabelRecord>& labels_b) {
  const auto a = labels_by_sample(labels_a, "labels_a");
  const auto b = labels_by_sample(labels_b, "labels_b");
  if (a.empty()) throw UsageError("cohens_kappa: no labels");
  require_same_samples(a, b);

  KappaResult out;
  const double n = static_cast<double>(a.size());
  std::array<std::uint64_t, kCategoryCount> count_a{}, count_b{};
  std::uint64_t agree = 0;
  for (const auto& [id, ca] : a) {
    const Category cb = b.at(id);
    out.confusion[static_cast<std::size_t>(ca)][static_cast<std::size_t>(cb)] += 1;
    count_a[static_cast<std::size_t>(ca)] += 1;
    count_b[static_cast<std::size_t>(cb)] += 1;
    if (ca == cb) ++agree;
  }
  out.p_o = static_cast<double>(agree) / n;
  out.p_e = 0.0;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    out.p_e += (static_cast<double>(count_a[c]) / n) * (static_cast<double>(count_b[c]) / n);
  }
  // p_e = 1 only when both annotators always chose the same single category,
  // which forces p_o = 1 as well.
  out.kappa = 1.0 - out.p_e < 1e-12 ? 1.0 : (out.p_o - out.p_e) / (1.0 - out.p_e);
  return out;
}

std::vector<std::pair<std::string, Category>> filter_agreed(
    const std::vector<LabelRecord>& labels_a, const std::vector<LabelRecord>& labels_b) {
  const auto a = labels_by_sample(labels_a, "labels_a");
  const auto b = labels_by_sample(labels_b, "labels_b");
  require_same_samples(a, b);
  std::vector<std::pair<std::string, Category>> out;
  for (const auto& [id, ca] : a) {
    if (b.at(id) == ca) out.emplace_back(id, ca);
  }
  return out;  // std::map iteration is already sorted by sample_id
}

namespace {

std::size_t count_hits(const std::string& text, std::initializer_list<const char*> needles) {
  std::size_t hits = 0;
  for (const char* needle : needles) {
    if (text.find(needle) != std::string::npos) ++hits;
  }
  return hits;
}

// Fraction of non-whitespace characters inside string literals or numeric
// runs.
double literal_density(const std::string& text) {
  std::size_t literal = 0, total = 0;
  bool in_string = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
    ++total;
    if (in_string) {
      ++literal;
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
    } else if (c == '"') {
      in_string = true;
      ++literal;
    } else if (c >= '0' && c <= '9') {
      ++literal;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(literal) / static_cast<double>(total);
}

double comment_line_fraction(const std::string& text) {
  std::size_t comment = 0, lines = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    ++lines;
    const std::string_view t = std::string_view(line).substr(start);
    if (t.starts_with("//") || t.starts_with("/*") || t.starts_with("*")) ++comment;
  }
  return lines == 0 ? 0.0 : static_cast<double>(comment) / static_cast<double>(lines);
}

}  // namespace

Prelabel heuristic_prelabel(const std::string& text) {
  const std::size_t license_hits =
      count_hits(text, {"Apache License", "GNU General Public", "MIT License",
                        "SPDX-License-Identifier", "Licensed under", "GENERAL PUBLIC LICENSE",
                        "Redistribution and use"});
  if (license_hits > 0) {
    return {Category::kLicense, std::min(1.0, 0.6 + 0.2 * static_cast<double>(license_hits))};
  }
  const std::size_t test_hits =
      count_hits(text, {"@Test", "assert", "junit", "JUnit", "TestCase", "extends Test"});
  if (test_hits > 0) {
    return {Category::kTesting, std::min(1.0, 0.6 + 0.2 * static_cast<double>(test_hits))};
  }
  const double literals = literal_density(text);
  if (literals > 0.4) return {Category::kDicts, literals};
  const double comments = comment_line_fraction(text);
  if (comments > 0.5) return {Category::kDocs, comments};
  return {Category::kCode, 0.5};
}

Prelabel heuristic_prelabel(const AttackSample& sample, Tokenizer& tok) {
  return heuristic_prelabel(tok.decode(sample.full_tokens()));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

}  // namespace

std::vector<LabelRecord> load_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<LabelRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (line_no == 1) {
      if (fields != std::vector<std::string>{"sample_id", "annotator_id", "category"}) {
        throw FormatError("label CSV must start with header "
                          "sample_id,annotator_id,category: " +
                              path.string(),
                          line_no);
      }
      continue;
    }
    if (fields.size() != 3) {
      throw FormatError("label CSV row needs 3 fields in " + path.string(), line_no);
    }
    out.push_back({fields[0], fields[1], category_from_name(fields[2])});
  }
  return out;
}

std::vector<LabelRecord> load_single_annotator_csv(const std::filesystem::path& path) {
  std::vector<LabelRecord> labels = load_labels_csv(path);
  std::set<std::string> annotators;
  for (const auto& l : labels) annotators.insert(l.annotator_id);
  if (annotators.size() != 1) {
    throw UsageError(path.string() + " must contain exactly one annotator, found " +
                     std::to_string(annotators.size()));
  }
  return labels;
}

ReportFormat report_format_from_name(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  if (name == "text") return ReportFormat::kText;
  throw UsageError("unknown report format: " + std::string(name));
}

namespace {

std::string format_double(double v) {
  // Shortest round-trip form, via the JSON serializer, so reports are
  // deterministic and exact.
  return nlohmann::json(v).dump();
}

std::string row_cell(const RateRow& row, std::size_t col) {
  switch (col) {
    case 0:
      return row.run_label;
    case 1:
      return row.prefix_len ? std::to_string(*row.prefix_len) : "";
    case 2:
      return row.bucket ? bucket_name(*row.bucket) : "";
    case 3:
      return row.category ? category_name(*row.category) : "";
    case 4:
      return std::to_string(row.n);
    case 5:
      return format_double(row.em_rate);
    case 6:
      return format_double(row.bleu_mean);
    case 7:
      return format_double(row.meteor_mean);
    case 8:
      return format_double(row.rouge_l_mean);
    case 9:
      return row.em_up ? format_double(*row.em_up) : "";
    case 10:
      return row.bleu_up ? format_double(*row.bleu_up) : "";
  }
  return "";
}

}  // namespace

std::string render_rate_table(const RateTable& table, ReportFormat format) {
  std::vector<std::string> header = {"run_label", "prefix_len",  "bucket",
                                     "category",  "n",           "em_rate",
                                     "bleu_mean", "meteor_mean", "rouge_l_mean"};
  if (table.has_deltas) {
    header.push_back("em_up");
    header.push_back("bleu_up");
  }
  if (format == ReportFormat::kJson) {
    nlohmann::json rows = nlohmann::json::array();
    for (const RateRow& row : table.rows) {
      nlohmann::json r;
      for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string cell = row_cell(row, c);
        if (c <= 3) {
          r[header[c]] = cell;
        } else if (cell.empty()) {
          r[header[c]] = nullptr;
        } else if (c == 4) {
          r[header[c]] = row.n;
        } else {
          r[header[c]] = nlohmann::json::parse(cell);
        }
      }
      rows.push_back(std::move(r));
    }
    nlohmann::json out = {{"rows", rows},
                          {"excluded_errors", table.excluded_errors},
                          {"excluded_unlabeled", table.excluded_unlabeled}};
    return out.dump(2) + "\n";
  }

  std::vector<std::vector<std::string>> grid;
  grid.push_back(header);
  for (const RateRow& row : table.rows) {
    std::vector<std::string> cells;
    for (std::size_t c = 0; c < header.size(); ++c) cells.push_back(row_cell(row, c));
    grid.push_back(std::move(cells));
  }

  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    for (const auto& cells : grid) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (c > 0) out << ',';
        out << cells[c];
      }
      out << '\n';
    }
    return out.str();
  }

  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& cells : grid) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      widths[c] = std::max(widths[c], cells[c].size());
    }
  }
  for (const auto& cells : grid) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) out << "  ";
      out << cells[c] << std::string(widths[c] - cells[c].size(), ' ');
    }
    out << '\n';
  }
  if (table.excluded_errors > 0) {
    out << "# excluded error results: " << table.excluded_errors << '\n';
  }
  if (table.excluded_unlabeled > 0) {
    out << "# excluded unlabeled results: " << table.excluded_unlabeled << '\n';
  }
  return out.str();
}

std::string render_kappa(const KappaResult& result, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    nlohmann::json confusion = nlohmann::json::array();
    for (std::size_t a = 0; a < kCategoryCount; ++a) {
      confusion.push_back(result.confusion[a]);
    }
    nlohmann::json out = {{"kappa", result.kappa},
                          {"observed_agreement", result.p_o},
                          {"expected_agreement", result.p_e},
                          {"categories", {"Code", "Dicts", "Docs", "License", "Testing"}},
                          {"confusion", confusion}};
    return out.dump(2) + "\n";
  }
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "kappa=%.4f p_o=%.4f p_e=%.4f\n", result.kappa,
                result.p_o, result.p_e);
  out << buf;
  out << "confusion (rows = annotator A):\n";
  out << "          ";
  for (std::size_t b = 0; b < kCategoryCount; ++b) {
    std::snprintf(buf, sizeof(buf), "%8s", category_name(static_cast<Category>(b)));
    out << buf;
  }
  out << '\n';
  for (std::size_t a = 0; a < kCategoryCount; ++a) {
    std::snprintf(buf, sizeof(buf), "%10s", category_name(static_cast<Category>(a)));
    out << buf;
    for (std::size_t b = 0; b < kCategoryCount; ++b) {
      std::snprintf(buf, sizeof(buf), "%8llu",
                    static_cast<unsigned long long>(result.confusion[a][b]));
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace extractaudit
