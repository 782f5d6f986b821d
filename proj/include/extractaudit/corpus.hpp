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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace extractaudit {

// Hygiene-filter flags. A file carrying any flag is dropped by apply_filters.
enum class FileFlag : unsigned {
  kTooLong = 1u << 0,
  kLowAlpha = 1u << 1,
  kAutogenerated = 1u << 2,
  kEncodedData = 1u << 3,
};
using FileFlags = unsigned;

const char* flag_name(FileFlag f);
std::vector<std::string> flag_names(FileFlags flags);

struct SourceFile {
  std::string file_id;
  std::string path;
  std::string content;  // UTF-8; invalid input bytes replaced with U+FFFD
  std::uint64_t size_bytes = 0;
  double alpha_fraction = 0.0;
  FileFlags flags = 0;
  nlohmann::json metadata;  // unknown JSONL keys, preserved opaquely
};

struct FilterConfig {
  std::uint64_t max_file_bytes = 1'000'000;
  double min_alpha_fraction = 0.25;
  std::vector<std::string> autogenerated_markers = {"Generated by", "DO NOT EDIT",
                                                    "auto-generated"};
  std::uint64_t max_line_length = 1000;  // proxy for encoded data

  void validate() const;
  nlohmann::json to_json() const;
  static FilterConfig from_json(const nlohmann::json& j);
};

enum class CorpusFormat { kDirectory, kJsonl };

struct Corpus {
  std::vector<SourceFile> files;  // ordered lexicographically by path
  std::string source;             // provenance: where it was loaded from
  std::string loaded_at;          // provenance only; never serialized
  std::optional<FilterConfig> filter_config;
};

// Loads every regular file under root (directory format) or one record per
// line (jsonl format, required keys "id" and "content"). Ordering is
// lexicographic by path regardless of filesystem enumeration order. Files
// that fail UTF-8 decoding are retained with replacement characters and
// flagged encoded_data.
Corpus load_corpus(const std::filesystem::path& root, CorpusFormat format);

struct Rejection {
  std::string file_id;
  FileFlags flags = 0;
};

struct FilterOutcome {
  Corpus kept;
  std::vector<Rejection> rejected;
};

// Flag computation is a pure function of content + config, so re-running the
// filter is idempotent.
FileFlags compute_flags(const SourceFile& file, const FilterConfig& config);

FilterOutcome apply_filters(const Corpus& corpus, const FilterConfig& config);

// Rejection log: JSONL records {"id": ..., "flags": [...]}.
std::string rejection_log_jsonl(const std::vector<Rejection>& rejected);

// Canonical serialization (JSONL, one file per line, provenance excluded).
// Two loads of the same data serialize byte-identically.
std::string corpus_to_jsonl(const Corpus& corpus);

std::uint64_t corpus_fingerprint(const Corpus& corpus);

// Alphabetic code points / total code points, 0.0 for empty content.
double alpha_fraction_of(std::string_view content);

// Replaces invalid UTF-8 sequences with U+FFFD; second member reports whether
// anything was replaced.
std::pair<std::string, bool> sanitize_utf8(std::string_view bytes);

}  // namespace extractaudit
