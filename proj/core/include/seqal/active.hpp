// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqal/corpus.hpp"
#include "seqal/tagger.hpp"

namespace seqal {

// kSubmod is dispatched by the representativeness selector, not by select().
enum class Strategy { kRand, kLc, kMnlp, kBald, kSubmod };

std::string strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);  // ParamError on unknown

struct UncertaintyScore {
  int64_t sentence_id = 0;
  Strategy strategy = Strategy::kLc;
  double value = 0;
};

// Ordered selection under a word budget.
struct SelectionResult {
  std::vector<int64_t> chosen;  // in pick order
  int64_t words_used = 0;
  int64_t budget = 0;
};

// Value extractors from a decoded sentence.
// LC: 1 - exp(log_prob), in [0, 1]; higher = more uncertain.
double lc_value(const Decoding& d);
// MNLP: mean per-step log probability, <= 0; lower = more uncertain.
double mnlp_value(const Decoding& d);  // ContractError on empty decoding

// Single-sentence scoring against a frozen model (eval mode).
UncertaintyScore score_lc(TaggerModel& model, const Sentence& s);
UncertaintyScore score_mnlp(TaggerModel& model, const Sentence& s);
// M stochastic passes with dropout active; per position the disagreement
// f_i = 1 - (top vote count)/M, and the value is the mean f_i, in
// [0, 1 - 1/M]. ParamError when passes < 2.
UncertaintyScore score_bald(TaggerModel& model, const Sentence& s,
                            int64_t passes, Rng& rng);

struct ScoreOptions {
  int64_t bald_passes = 8;
  int64_t batch_size = 32;
  uint64_t seed = 0;  // stream base for BALD masks and RAND draws
};

// Scores every pool sentence. LC/MNLP run batched (deterministic eval makes
// batching invisible); BALD scores one sentence at a time with an rng stream
// keyed by sentence id; RAND draws a uniform value per sentence the same way.
// Results are in pool order.
std::vector<UncertaintyScore> score_pool(TaggerModel& model,
                                         const std::vector<const Sentence*>& pool,
                                         Strategy strategy,
                                         const ScoreOptions& opts);

// Fills the budget in rank order, skipping anything that no longer fits.
// ranked holds (sentence id, word count) pairs.
SelectionResult knapsack_fill(
    const std::vector<std::pair<int64_t, int64_t>>& ranked, int64_t budget);

// Ranks the pool (RAND: seeded shuffle; MNLP: ascending value; LC/BALD:
// descending; all ties by lower sentence id) and knapsack-fills the word
// budget. Sentences already in labeled_ids are ignored. The rng seeds the
// stochastic strategies; deterministic given (model, pool, rng state).
SelectionResult select(Strategy strategy,
                       const std::vector<const Sentence*>& pool,
                       const std::vector<int64_t>& labeled_ids,
                       TaggerModel& model, int64_t budget_words, Rng& rng,
                       const ScoreOptions& opts = {});

}  // namespace seqal
