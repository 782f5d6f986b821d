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

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace extractaudit {

// Calls fn(line_no, record) for every non-blank line; line numbers are
// 1-based. Throws FormatError with the line number on a malformed line.
// If tolerate_truncated_tail is set, an unparseable final line is skipped
// (an interrupted writer may leave a partial record).
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const nlohmann::json&)>& fn,
                    bool tolerate_truncated_tail = false);

// Writes content to path via a temp file + rename so readers never observe a
// half-written file.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// UTC wall-clock timestamp, ISO 8601. Only ever recorded in manifests.
std::string utc_timestamp();

}  // namespace extractaudit
