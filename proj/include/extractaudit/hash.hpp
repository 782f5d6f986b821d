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
#include <string>
#include <string_view>

namespace extractaudit {

// Fixed hashing primitives. The constants below are part of the on-disk and
// cross-machine contract: indexes, fingerprints, and the mock's recall rule
// must reproduce bit-for-bit everywhere, so nothing here may depend on
// std::hash or other implementation-defined functions.

// splitmix64 finalizer (Steele, Lea, Flood; public domain reference constants).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a, 64-bit.
inline constexpr std::uint64_t kFnv64Basis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnv64Prime = 0x00000100000001b3ULL;

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = kFnv64Basis) {
  for (unsigned char c : data) {
    h ^= c;
    h *= kFnv64Prime;
  }
  return h;
}

// Deterministic map of (seed, key) to a double in [0, 1). This is the rule
// the mock memorizer gates recall on; tests replay it independently.
inline double unit_interval_hash(std::uint64_t seed, std::uint64_t key) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(key));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out = "0x";
  for (int shift = 60; shift >= 0; shift -= 4) {
    out.push_back(digits[(v >> shift) & 0xf]);
  }
  return out;
}

}  // namespace extractaudit
