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

#include "extractaudit/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "extractaudit/errors.hpp"
#include "extractaudit/hash.hpp"
#include "extractaudit/jsonl.hpp"

namespace extractaudit {

const char* flag_name(FileFlag f) {
  switch (f) {
    case FileFlag::kTooLong:
      return "too_long";
    case FileFlag::kLowAlpha:
      return "low_alpha";
    case FileFlag::kAutogenerated:
      return "autogenerated";
    case FileFlag::kEncodedData:
      return "encoded_data";
  }
  return "?";
}

std::vector<std::string> flag_names(FileFlags flags) {
  std::vector<std::string> out;
  for (FileFlag f : {FileFlag::kTooLong, FileFlag::kLowAlpha, FileFlag::kAutogenerated,
                     FileFlag::kEncodedData}) {
    if (flags & static_cast<FileFlags>(f)) out.emplace_back(flag_name(f));
  }
  return out;
}

void FilterConfig::validate() const {
  if (max_file_bytes == 0) throw UsageError("max_file_bytes must be positive");
  if (min_alpha_fraction <= 0.0 || min_alpha_fraction > 1.0) {
    throw UsageError("min_alpha_fraction must be in (0, 1]");
  }
  if (max_line_length == 0) throw UsageError("max_line_length must be positive");
  if (autogenerated_markers.empty()) {
    throw UsageError("autogenerated_markers must be non-empty");
  }
}

nlohmann::json FilterConfig::to_json() const {
  return {{"max_file_bytes", max_file_bytes},
          {"min_alpha_fraction", min_alpha_fraction},
          {"autogenerated_markers", autogenerated_markers},
          {"max_line_length", max_line_length}};
}

FilterConfig FilterConfig::from_json(const nlohmann::json& j) {
  FilterConfig out;
  out.max_file_bytes = j.at("max_file_bytes").get<std::uint64_t>();
  out.min_alpha_fraction = j.at("min_alpha_fraction").get<double>();
  out.autogenerated_markers = j.at("autogenerated_markers").get<std::vector<std::string>>();
  out.max_line_length = j.at("max_line_length").get<std::uint64_t>();
  return out;
}

std::pair<std::string, bool> sanitize_utf8(std::string_view bytes) {
  static constexpr const char* kReplacement = "\xEF\xBF\xBD";  // U+FFFD
  std::string out;
  out.reserve(bytes.size());
  bool replaced = false;
  std::size_t i = 0;
  const std::size_t n = bytes.size();
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(bytes[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      len = 1;
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len != 0 && i + len <= n;
    for (std::size_t k = 1; ok && k < len; ++k) {
      const unsigned char cc = static_cast<unsigned char>(bytes[i + k]);
      if ((cc & 0xC0) != 0x80) {
        ok = false;
      } else {
        cp = (cp << 6) | (cc & 0x3F);
      }
    }
    if (ok) {
      // Reject overlong encodings, surrogates, and out-of-range code points.
      if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
          (len == 4 && cp < 0x10000) || (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
        ok = false;
      }
    }
    if (ok) {
      out.append(bytes.substr(i, len));
      i += len;
    } else {
      out.append(kReplacement);
      replaced = true;
      ++i;
    }
  }
  return {std::move(out), replaced};
}

double alpha_fraction_of(std::string_view content) {
  std::uint64_t code_points = 0;
  std::uint64_t alpha = 0;
  for (std::size_t i = 0; i < content.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(content[i]);
    if ((c & 0xC0) == 0x80) continue;  // continuation byte
    ++code_points;
    if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z')) ++alpha;
  }
  if (code_points == 0) return 0.0;
  return static_cast<double>(alpha) / static_cast<double>(code_points);
}

namespace {

SourceFile make_source_file(std::string file_id, std::string path, std::string raw_bytes,
                            nlohmann::json metadata) {
  SourceFile f;
  f.file_id = std::move(file_id);
  f.path = std::move(path);
  f.size_bytes = raw_bytes.size();
  auto [clean, replaced] = sanitize_utf8(raw_bytes);
  f.content = std::move(clean);
  f.alpha_fraction = alpha_fraction_of(f.content);
  if (replaced) f.flags |= static_cast<FileFlags>(FileFlag::kEncodedData);
  f.metadata = std::move(metadata);
  return f;
}

Corpus load_directory(const std::filesystem::path& root) {
  Corpus corpus;
  corpus.source = root.string();
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) paths.push_back(entry.path());
  }
  std::vector<std::string> relative;
  relative.reserve(paths.size());
  for (const auto& p : paths) {
    relative.push_back(p.lexically_relative(root).generic_string());
  }
  std::sort(relative.begin(), relative.end());
  for (const auto& rel : relative) {
    corpus.files.push_back(
        make_source_file(rel, rel, read_file(root / rel), nlohmann::json::object()));
  }
  return corpus;
}

Corpus load_jsonl(const std::filesystem::path& path) {
  Corpus corpus;
  corpus.source = path.string();
  for_each_jsonl(path, [&](std::size_t line_no, const nlohmann::json& record) {
    if (!record.is_object() || !record.contains("id") || !record["id"].is_string() ||
        !record.contains("content") || !record["content"].is_string()) {
      throw FormatError("JSONL record needs string fields 'id' and 'content' in " +
                            path.string(),
                        line_no);
    }
    const std::string id = record["id"].get<std::string>();
    std::string file_path =
        record.contains("path") && record["path"].is_string()
            ? record["path"].get<std::string>()
            : id;
    nlohmann::json metadata = nlohmann::json::object();
    for (const auto& [key, value] : record.items()) {
      if (key != "id" && key != "content" && key != "path") metadata[key] = value;
    }
    corpus.files.push_back(make_source_file(id, std::move(file_path),
                                            record["content"].get<std::string>(),
                                            std::move(metadata)));
  });
  std::stable_sort(corpus.files.begin(), corpus.files.end(),
                   [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
  return corpus;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& root, CorpusFormat format) {
  if (!std::filesystem::exists(root)) {
    throw Error("corpus path not found: " + root.string());
  }
  Corpus corpus = format == CorpusFormat::kDirectory ? load_directory(root)
                                                     : load_jsonl(root);
  corpus.loaded_at = utc_timestamp();
  std::set<std::string> ids;
  for (const auto& f : corpus.files) {
    if (!ids.insert(f.file_id).second) {
      throw FormatError("duplicate file_id in corpus: " + f.file_id);
    }
  }
  return corpus;
}

FileFlags compute_flags(const SourceFile& file, const FilterConfig& config) {
  FileFlags flags = 0;
  if (file.size_bytes > config.max_file_bytes) {
    flags |= static_cast<FileFlags>(FileFlag::kTooLong);
  }
  if (file.alpha_fraction < config.min_alpha_fraction) {
    flags |= static_cast<FileFlags>(FileFlag::kLowAlpha);
  }
  for (const auto& marker : config.autogenerated_markers) {
    if (file.content.find(marker) != std::string::npos) {
      flags |= static_cast<FileFlags>(FileFlag::kAutogenerated);
      break;
    }
  }
  // Encoded data: an over-long line, or replacement characters left behind by
  // UTF-8 sanitization.
  std::size_t line_start = 0;
  const std::string& c = file.content;
  for (std::size_t i = 0; i <= c.size(); ++i) {
    if (i == c.size() || c[i] == '\n') {
      if (i - line_start > config.max_line_length) {
        flags |= static_cast<FileFlags>(FileFlag::kEncodedData);
        break;
      }
      line_start = i + 1;
    }
  }
  if (c.find("\xEF\xBF\xBD") != std::string::npos) {
    flags |= static_cast<FileFlags>(FileFlag::kEncodedData);
  }
  return flags;
}

FilterOutcome apply_filters(const Corpus& corpus, const FilterConfig& config) {
  config.validate();
  FilterOutcome outcome;
  outcome.kept.source = corpus.source;
  outcome.kept.loaded_at = corpus.loaded_at;
  outcome.kept.filter_config = config;
  for (const SourceFile& f : corpus.files) {
    SourceFile copy = f;
    copy.flags = compute_flags(f, config);
    if (copy.flags == 0) {
      outcome.kept.files.push_back(std::move(copy));
    } else {
      outcome.rejected.push_back({copy.file_id, copy.flags});
    }
  }
  return outcome;
}

std::string rejection_log_jsonl(const std::vector<Rejection>& rejected) {
  std::ostringstream out;
  for (const auto& r : rejected) {
    nlohmann::json rec = {{"id", r.file_id}, {"flags", flag_names(r.flags)}};
    out << rec.dump() << '\n';
  }
  return out.str();
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::ostringstream out;
  for (const auto& f : corpus.files) {
    nlohmann::json rec = {{"id", f.file_id},
                          {"path", f.path},
                          {"content", f.content},
                          {"size_bytes", f.size_bytes},
                          {"alpha_fraction", f.alpha_fraction},
                          {"flags", flag_names(f.flags)}};
    if (!f.metadata.empty()) rec["metadata"] = f.metadata;
    out << rec.dump() << '\n';
  }
  return out.str();
}

std::uint64_t corpus_fingerprint(const Corpus& corpus) {
  std::uint64_t h = kFnv64Basis;
  for (const auto& f : corpus.files) {
    h = fnv1a64(f.file_id, h);
    h = fnv1a64({"\0", 1}, h);
    h = fnv1a64(f.path, h);
    h = fnv1a64({"\0", 1}, h);
    h = fnv1a64(f.content, h);
    h = fnv1a64({"\0", 1}, h);
  }
  return h;
}

}  // namespace extractaudit
