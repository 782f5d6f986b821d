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

#include "extractaudit/tokenizer.hpp"

#include <cctype>
#include <chrono>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

namespace extractaudit {

const char* provider_name(TokenizerProvider p) {
  switch (p) {
    case TokenizerProvider::kByte:
      return "byte";
    case TokenizerProvider::kWhitespace:
      return "whitespace";
    case TokenizerProvider::kExternalHttp:
      return "external_http";
  }
  return "?";
}

TokenizerProvider provider_from_name(std::string_view name) {
  if (name == "byte") return TokenizerProvider::kByte;
  if (name == "whitespace") return TokenizerProvider::kWhitespace;
  if (name == "external_http" || name == "external") return TokenizerProvider::kExternalHttp;
  throw UsageError("unknown tokenizer provider: " + std::string(name));
}

TokenSeq concat(const TokenSeq& a, const TokenSeq& b) {
  require_same_tokenizer(a, b);
  TokenSeq out = a;
  out.ids.insert(out.ids.end(), b.ids.begin(), b.ids.end());
  return out;
}

TokenSeq slice(const TokenSeq& s, std::size_t begin, std::size_t len) {
  if (begin + len > s.ids.size()) throw UsageError("slice out of range");
  TokenSeq out;
  out.tokenizer_id = s.tokenizer_id;
  out.ids.assign(s.ids.begin() + static_cast<std::ptrdiff_t>(begin),
                 s.ids.begin() + static_cast<std::ptrdiff_t>(begin + len));
  return out;
}

namespace {

class ByteTokenizer final : public Tokenizer {
 public:
  explicit ByteTokenizer(std::string id) : id_(std::move(id)) {}

  TokenSeq encode(std::string_view text) override {
    TokenSeq out;
    out.tokenizer_id = id_;
    out.ids.reserve(text.size());
    for (unsigned char c : text) out.ids.push_back(c);
    return out;
  }

  std::string decode(const TokenSeq& seq) override {
    check_id(seq);
    std::string out;
    out.reserve(seq.ids.size());
    for (TokenId t : seq.ids) {
      if (t > 255) throw UsageError("byte tokenizer: token id out of range");
      out.push_back(static_cast<char>(t));
    }
    return out;
  }

  const std::string& id() const override { return id_; }
  TokenizerProvider provider() const override { return TokenizerProvider::kByte; }

 private:
  void check_id(const TokenSeq& seq) const {
    if (seq.tokenizer_id != id_) {
      throw UsageError("tokenizer mismatch: sequence from '" + seq.tokenizer_id +
                       "' given to '" + id_ + "'");
    }
  }

  std::string id_;
};

class WhitespaceTokenizer final : public Tokenizer {
 public:
  explicit WhitespaceTokenizer(std::string id) : id_(std::move(id)) {}

  TokenSeq encode(std::string_view text) override {
    TokenSeq out;
    out.tokenizer_id = id_;
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && is_space(text[i])) ++i;
      std::size_t start = i;
      while (i < text.size() && !is_space(text[i])) ++i;
      if (i > start) out.ids.push_back(intern(text.substr(start, i - start)));
    }
    return out;
  }

  std::string decode(const TokenSeq& seq) override {
    if (seq.tokenizer_id != id_) {
      throw UsageError("tokenizer mismatch: sequence from '" + seq.tokenizer_id +
                       "' given to '" + id_ + "'");
    }
    std::lock_guard<std::mutex> lock(mu_);
    std::string out;
    for (std::size_t i = 0; i < seq.ids.size(); ++i) {
      if (seq.ids[i] >= words_.size()) {
        throw UsageError("whitespace tokenizer: unknown token id " +
                         std::to_string(seq.ids[i]));
      }
      if (i > 0) out.push_back(' ');
      out += words_[seq.ids[i]];
    }
    return out;
  }

  const std::string& id() const override { return id_; }
  TokenizerProvider provider() const override { return TokenizerProvider::kWhitespace; }

 private:
  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  }

  TokenId intern(std::string_view word) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = vocab_.find(std::string(word));
    if (it != vocab_.end()) return it->second;
    const TokenId id = static_cast<TokenId>(words_.size());
    words_.emplace_back(word);
    vocab_.emplace(words_.back(), id);
    return id;
  }

  std::string id_;
  std::mutex mu_;
  std::unordered_map<std::string, TokenId> vocab_;
  std::vector<std::string> words_;
};

// Client of the tokenize/detokenize wire protocol. Timeouts and non-200
// responses are both retryable; the attempt count travels in the error.
class HttpTokenizer final : public Tokenizer {
 public:
  HttpTokenizer(std::string url, std::string id, ExternalTokenizerOptions opts)
      : url_(std::move(url)), id_(std::move(id)), opts_(opts) {
    const auto scheme = url_.find("://");
    if (scheme == std::string::npos) {
      throw UsageError("external tokenizer endpoint must include a scheme: " + url_);
    }
    const auto path = url_.find('/', scheme + 3);
    if (path == std::string::npos) {
      host_part_ = url_;
    } else {
      host_part_ = url_.substr(0, path);
      path_prefix_ = url_.substr(path);
      while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
  }

  TokenSeq encode(std::string_view text) override {
    nlohmann::json body = {{"text", std::string(text)}};
    const nlohmann::json reply = post("/tokenize", body);
    if (!reply.contains("tokens") || !reply["tokens"].is_array()) {
      throw ProtocolError(200, "tokenize reply missing tokens array");
    }
    TokenSeq out;
    out.tokenizer_id = id_;
    out.ids.reserve(reply["tokens"].size());
    for (const auto& t : reply["tokens"]) {
      if (!t.is_number_integer() || t.get<std::int64_t>() < 0) {
        throw ProtocolError(200, "tokenize reply contains a non-token value");
      }
      out.ids.push_back(t.get<TokenId>());
    }
    return out;
  }

  std::string decode(const TokenSeq& seq) override {
    if (seq.tokenizer_id != id_) {
      throw UsageError("tokenizer mismatch: sequence from '" + seq.tokenizer_id +
                       "' given to '" + id_ + "'");
    }
    nlohmann::json body = {{"tokens", seq.ids}};
    const nlohmann::json reply = post("/detokenize", body);
    if (!reply.contains("text") || !reply["text"].is_string()) {
      throw ProtocolError(200, "detokenize reply missing text");
    }
    return reply["text"].get<std::string>();
  }

  const std::string& id() const override { return id_; }
  TokenizerProvider provider() const override { return TokenizerProvider::kExternalHttp; }

 private:
  nlohmann::json post(const std::string& route, const nlohmann::json& body) {
    const std::string payload = body.dump();
    std::string last_failure;
    int attempts = 0;
    while (attempts <= opts_.max_retries) {
      ++attempts;
      httplib::Client cli(host_part_);
      cli.set_connection_timeout(std::chrono::milliseconds(opts_.timeout_ms));
      cli.set_read_timeout(std::chrono::milliseconds(opts_.timeout_ms));
      cli.set_write_timeout(std::chrono::milliseconds(opts_.timeout_ms));
      auto res = cli.Post(path_prefix_ + route, payload, "application/json");
      if (res && res->status == 200) {
        nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded()) throw ProtocolError(200, "unparseable tokenizer reply");
        return reply;
      }
      last_failure = res ? "HTTP " + std::to_string(res->status)
                         : std::string(httplib::to_string(res.error()));
      if (attempts <= opts_.max_retries) {
        const auto delay = opts_.backoff_base_ms * (1 << (attempts - 1));
        std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      }
    }
    throw TransportError("tokenizer endpoint " + host_part_ + route + ": " + last_failure,
                         attempts);
  }

  std::string url_;
  std::string host_part_;
  std::string path_prefix_;
  std::string id_;
  ExternalTokenizerOptions opts_;
};

}  // namespace

std::unique_ptr<Tokenizer> make_tokenizer(const TokenizerSpec& spec,
                                          const ExternalTokenizerOptions& opts) {
  std::string id = spec.tokenizer_id;
  switch (spec.provider) {
    case TokenizerProvider::kByte:
      return std::make_unique<ByteTokenizer>(id.empty() ? "byte" : id);
    case TokenizerProvider::kWhitespace:
      return std::make_unique<WhitespaceTokenizer>(id.empty() ? "whitespace" : id);
    case TokenizerProvider::kExternalHttp:
      if (spec.endpoint_url.empty()) {
        throw UsageError("external tokenizer requires an endpoint url");
      }
      return std::make_unique<HttpTokenizer>(spec.endpoint_url,
                                             id.empty() ? spec.endpoint_url : id, opts);
  }
  throw UsageError("unknown tokenizer provider");
}

}  // namespace extractaudit
