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

#include "extractaudit/tokenizer.hpp"

namespace extractaudit {

// Similarity metrics over token id sequences. All return values lie in [0,1].
// Candidate and reference must come from the same tokenizer; the fuzzy
// metrics require a nonempty reference and score an empty candidate as 0.

// 1 iff the sequences are element-wise identical (including length).
int exact_match(const TokenSeq& candidate, const TokenSeq& reference);

// Sentence-level BLEU-4: modified n-gram precisions p_1..p_4; for n >= 2 a
// zero numerator is smoothed add-one on numerator and denominator; p_1 = 0
// scores 0. Brevity penalty 1 if |c| >= |r|, else exp(1 - |r|/|c|). Score is
// BP * exp(mean of ln p_n).
double bleu(const TokenSeq& candidate, const TokenSeq& reference);

// LCS F1: P = L/|c|, R = L/|r|, F1 = 2PR/(P+R); 0 when the LCS is empty.
double rouge_l(const TokenSeq& candidate, const TokenSeq& reference);

// Exact-token METEOR (no stemming or synonymy): unigram matches m aligned
// greedily left to right, preferring the alignment that continues the current
// chunk; P = m/|c|, R = m/|r|, F_mean = 10PR/(R + 9P), fragmentation penalty
// 0.5*(chunks/m)^3; score = F_mean * (1 - penalty); 0 when m = 0.
double meteor(const TokenSeq& candidate, const TokenSeq& reference);

}  // namespace extractaudit
