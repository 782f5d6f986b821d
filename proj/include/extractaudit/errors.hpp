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
#include <map>
#include <stdexcept>
#include <string>

namespace extractaudit {

// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or violated preconditions at an API/CLI boundary.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; carries the offending line when known.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line_no = 0)
      : Error(line_no == 0 ? what : what + " (line " + std::to_string(line_no) + ")"),
        line_no_(line_no) {}

  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

// Network-level failure after the retry budget was spent. Retryable in
// principle; the attempt count is how many requests were made in total.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(what + " (after " + std::to_string(attempts) + " attempts)"),
        attempts_(attempts) {}

  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

// The peer answered, but not with a usable response. Never retried.
class ProtocolError : public Error {
 public:
  ProtocolError(int status, const std::string& body)
      : Error("protocol error: HTTP " + std::to_string(status) +
              (body.empty() ? "" : ": " + body)),
        status_(status),
        body_(body) {}

  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

// A benchmark builder could not satisfy the requested sample count.
// `reasons` holds per-cause rejection counts for diagnostics; nothing is
// silently padded or reduced.
class UnderfillError : public Error {
 public:
  UnderfillError(std::uint64_t requested, std::uint64_t available,
                 std::map<std::string, std::uint64_t> reasons)
      : Error(compose(requested, available, reasons)),
        requested_(requested),
        available_(available),
        reasons_(std::move(reasons)) {}

  std::uint64_t requested() const { return requested_; }
  std::uint64_t available() const { return available_; }
  const std::map<std::string, std::uint64_t>& reasons() const { return reasons_; }

 private:
  static std::string compose(std::uint64_t requested, std::uint64_t available,
                             const std::map<std::string, std::uint64_t>& reasons) {
    std::string msg = "underfill: requested " + std::to_string(requested) +
                      ", eligible " + std::to_string(available);
    for (const auto& [k, v] : reasons) {
      msg += "; " + k + "=" + std::to_string(v);
    }
    return msg;
  }

  std::uint64_t requested_;
  std::uint64_t available_;
  std::map<std::string, std::uint64_t> reasons_;
};

}  // namespace extractaudit
