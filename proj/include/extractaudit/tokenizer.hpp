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
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "extractaudit/errors.hpp"

namespace extractaudit {

using TokenId = std::uint32_t;

// A token sequence tagged with the tokenizer that produced it. Sequences from
// different tokenizers are never compared or concatenated; helpers below
// enforce that instead of silently coercing.
struct TokenSeq {
  std::vector<TokenId> ids;
  std::string tokenizer_id;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  std::span<const TokenId> span() const { return {ids.data(), ids.size()}; }

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

enum class TokenizerProvider { kByte, kWhitespace, kExternalHttp };

const char* provider_name(TokenizerProvider p);
TokenizerProvider provider_from_name(std::string_view name);

struct TokenizerSpec {
  TokenizerProvider provider = TokenizerProvider::kByte;
  std::string endpoint_url;  // only for kExternalHttp
  std::string tokenizer_id;

  static TokenizerSpec byte() { return {TokenizerProvider::kByte, "", "byte"}; }
  static TokenizerSpec whitespace() {
    return {TokenizerProvider::kWhitespace, "", "whitespace"};
  }
  static TokenizerSpec external(std::string url, std::string id) {
    return {TokenizerProvider::kExternalHttp, std::move(url), std::move(id)};
  }
};

// Tokenizer contract. The byte provider maps each byte to its value and
// satisfies decode(encode(x)) = x and the concatenation homomorphism
// encode(x||y) = encode(x)||encode(y). The whitespace provider interns
// maximal non-whitespace runs into a per-instance vocabulary; it satisfies
// encode(decode(encode(x))) = encode(x). The external provider speaks the
// tokenize/detokenize wire protocol (see README) and retries transport
// failures and non-200 replies.
//
// Built-in providers are deterministic; the whitespace vocabulary is local to
// the instance, so its token ids are not meaningful across processes.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual TokenSeq encode(std::string_view text) = 0;
  virtual std::string decode(const TokenSeq& seq) = 0;
  virtual const std::string& id() const = 0;
  virtual TokenizerProvider provider() const = 0;
};

struct ExternalTokenizerOptions {
  int timeout_ms = 10000;
  int max_retries = 3;
  int backoff_base_ms = 100;
};

std::unique_ptr<Tokenizer> make_tokenizer(const TokenizerSpec& spec,
                                          const ExternalTokenizerOptions& opts = {});

inline void require_same_tokenizer(const TokenSeq& a, const TokenSeq& b) {
  if (a.tokenizer_id != b.tokenizer_id) {
    throw UsageError("token sequences from different tokenizers ('" + a.tokenizer_id +
                     "' vs '" + b.tokenizer_id + "') cannot be combined");
  }
}

TokenSeq concat(const TokenSeq& a, const TokenSeq& b);
TokenSeq slice(const TokenSeq& s, std::size_t begin, std::size_t len);

}  // namespace extractaudit
