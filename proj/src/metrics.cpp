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

#include "extractaudit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "extractaudit/errors.hpp"

namespace extractaudit {

namespace {

void require_reference(const TokenSeq& candidate, const TokenSeq& reference,
                       const char* metric) {
  require_same_tokenizer(candidate, reference);
  if (reference.empty()) {
    throw UsageError(std::string(metric) + ": empty reference");
  }
}

// Clipped n-gram matches and total candidate n-grams.
std::pair<std::uint64_t, std::uint64_t> ngram_overlap(const std::vector<TokenId>& c,
                                                      const std::vector<TokenId>& r,
                                                      std::size_t n) {
  if (c.size() < n) return {0, 0};
  std::map<std::vector<TokenId>, std::int64_t> ref_counts;
  for (std::size_t i = 0; i + n <= r.size(); ++i) {
    std::vector<TokenId> g(r.begin() + static_cast<std::ptrdiff_t>(i),
                           r.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++ref_counts[std::move(g)];
  }
  std::uint64_t matched = 0;
  const std::uint64_t total = c.size() - n + 1;
  for (std::size_t i = 0; i + n <= c.size(); ++i) {
    std::vector<TokenId> g(c.begin() + static_cast<std::ptrdiff_t>(i),
                           c.begin() + static_cast<std::ptrdiff_t>(i + n));
    auto it = ref_counts.find(g);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++matched;
    }
  }
  return {matched, total};
}

std::size_t lcs_length(const std::vector<TokenId>& a, const std::vector<TokenId>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

int exact_match(const TokenSeq& candidate, const TokenSeq& reference) {
  require_same_tokenizer(candidate, reference);
  return candidate.ids == reference.ids ? 1 : 0;
}

double bleu(const TokenSeq& candidate, const TokenSeq& reference) {
  require_reference(candidate, reference, "bleu");
  if (candidate.empty()) return 0.0;
  const auto& c = candidate.ids;
  const auto& r = reference.ids;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto [matched, total] = ngram_overlap(c, r, n);
    double p;
    if (n == 1) {
      if (matched == 0) return 0.0;
      p = static_cast<double>(matched) / static_cast<double>(total);
    } else if (matched == 0) {
      // Add-one smoothing on numerator and denominator for zero numerators.
      p = 1.0 / static_cast<double>(total + 1);
    } else {
      p = static_cast<double>(matched) / static_cast<double>(total);
    }
    log_sum += std::log(p);
  }
  const double bp = c.size() >= r.size()
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(r.size()) /
                                             static_cast<double>(c.size()));
  return bp * std::exp(0.25 * log_sum);
}

double rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
  require_reference(candidate, reference, "rouge_l");
  if (candidate.empty()) return 0.0;
  const std::size_t l = lcs_length(candidate.ids, reference.ids);
  if (l == 0) return 0.0;
  const double p = static_cast<double>(l) / static_cast<double>(candidate.size());
  const double r = static_cast<double>(l) / static_cast<double>(reference.size());
  return 2.0 * p * r / (p + r);
}

double meteor(const TokenSeq& candidate, const TokenSeq& reference) {
  require_reference(candidate, reference, "meteor");
  if (candidate.empty()) return 0.0;
  const auto& c = candidate.ids;
  const auto& r = reference.ids;

  std::unordered_map<TokenId, std::vector<std::size_t>> ref_positions;
  for (std::size_t j = 0; j < r.size(); ++j) ref_positions[r[j]].push_back(j);

  // Greedy left-to-right alignment: extend the current chunk when the next
  // reference position carries the right token, otherwise take the leftmost
  // unused occurrence.
  std::vector<bool> used(r.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto it = ref_positions.find(c[i]);
    if (it == ref_positions.end()) continue;
    std::size_t chosen = r.size();
    if (!pairs.empty() && pairs.back().first == i - 1) {
      const std::size_t next_j = pairs.back().second + 1;
      if (next_j < r.size() && !used[next_j] && r[next_j] == c[i]) chosen = next_j;
    }
    if (chosen == r.size()) {
      for (std::size_t j : it->second) {
        if (!used[j]) {
          chosen = j;
          break;
        }
      }
    }
    if (chosen == r.size()) continue;
    used[chosen] = true;
    pairs.emplace_back(i, chosen);
  }

  const std::size_t m = pairs.size();
  if (m == 0) return 0.0;
  std::size_t chunks = 1;
  for (std::size_t k = 1; k < m; ++k) {
    if (pairs[k].first != pairs[k - 1].first + 1 ||
        pairs[k].second != pairs[k - 1].second + 1) {
      ++chunks;
    }
  }
  const double p = static_cast<double>(m) / static_cast<double>(c.size());
  const double rec = static_cast<double>(m) / static_cast<double>(r.size());
  const double f_mean = 10.0 * p * rec / (rec + 9.0 * p);
  const double frag = static_cast<double>(chunks) / static_cast<double>(m);
  const double penalty = 0.5 * frag * frag * frag;
  return f_mean * (1.0 - penalty);
}

}  // namespace extractaudit
