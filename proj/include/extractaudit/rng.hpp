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
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "extractaudit/errors.hpp"

namespace extractaudit {

// Seeded RNG with portable derived draws. std::mt19937_64 output is pinned by
// the standard, but std::uniform_int_distribution and std::shuffle are not,
// so bounded draws and shuffles are implemented here to keep benchmark
// sampling byte-identical across standard libraries.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform in [0, n) via rejection sampling; unbiased for every n.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw UsageError("SeededRng::below: n must be positive");
    // Accept r < 2^64 - (2^64 mod n), then reduce.
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t mod = (max % n + 1) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = gen_();
      if (mod == 0 || r <= max - mod) return r % n;
    }
  }

  // Fisher-Yates using below(); deterministic given the seed.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace extractaudit
