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

#include "seqal/active.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace seqal {

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kRand: return "RAND";
    case Strategy::kLc: return "LC";
    case Strategy::kMnlp: return "MNLP";
    case Strategy::kBald: return "BALD";
    case Strategy::kSubmod: return "SUBMOD";
  }
  throw ParamError("strategy_name: bad strategy");
}

Strategy parse_strategy(const std::string& name) {
  if (name == "RAND") return Strategy::kRand;
  if (name == "LC") return Strategy::kLc;
  if (name == "MNLP") return Strategy::kMnlp;
  if (name == "BALD") return Strategy::kBald;
  if (name == "SUBMOD") return Strategy::kSubmod;
  throw ParamError("unknown strategy " + name);
}

double lc_value(const Decoding& d) { return 1.0 - std::exp(d.log_prob); }

double mnlp_value(const Decoding& d) {
  if (d.step_log_probs.empty()) throw ContractError("mnlp_value: empty decoding");
  double s = 0;
  for (double p : d.step_log_probs) s += p;
  return s / static_cast<double>(d.step_log_probs.size());
}

namespace {

Decoding decode_single(TaggerModel& model, const Sentence& s) {
  Rng eval_rng(0);
  FormattedBatch fb = format_batch({&s}, model.vocab);
  EncoderOutput enc = encode(fb, model, RunMode::kEval, eval_rng);
  return decode(enc, model, 0);
}

}  // namespace

UncertaintyScore score_lc(TaggerModel& model, const Sentence& s) {
  return {s.id, Strategy::kLc, lc_value(decode_single(model, s))};
}

UncertaintyScore score_mnlp(TaggerModel& model, const Sentence& s) {
  return {s.id, Strategy::kMnlp, mnlp_value(decode_single(model, s))};
}

UncertaintyScore score_bald(TaggerModel& model, const Sentence& s,
                            int64_t passes, Rng& rng) {
  if (passes < 2) throw ParamError("score_bald: need at least 2 passes");
  FormattedBatch fb = format_batch({&s}, model.vocab);
  const int64_t n = s.n_words();
  const int64_t t_out = model.n_output_tags();
  std::vector<int32_t> votes(static_cast<size_t>(n * t_out), 0);
  for (int64_t m = 0; m < passes; ++m) {
    EncoderOutput enc = encode(fb, model, RunMode::kMcDropout, rng);
    const Decoding d = decode(enc, model, 0);
    for (int64_t i = 0; i < n; ++i) {
      ++votes[static_cast<size_t>(i * t_out + d.tags[static_cast<size_t>(i)])];
    }
  }
  double total = 0;
  for (int64_t i = 0; i < n; ++i) {
    int32_t top = 0;
    for (int64_t y = 0; y < t_out; ++y) {
      top = std::max(top, votes[static_cast<size_t>(i * t_out + y)]);
    }
    total += 1.0 - static_cast<double>(top) / static_cast<double>(passes);
  }
  return {s.id, Strategy::kBald, total / static_cast<double>(n)};
}

std::vector<UncertaintyScore> score_pool(TaggerModel& model,
                                         const std::vector<const Sentence*>& pool,
                                         Strategy strategy,
                                         const ScoreOptions& opts) {
  std::vector<UncertaintyScore> out;
  out.reserve(pool.size());
  switch (strategy) {
    case Strategy::kRand: {
      for (const Sentence* s : pool) {
        Rng r = Rng::stream(opts.seed, static_cast<uint64_t>(s->id));
        out.push_back({s->id, strategy, r.uniform()});
      }
      return out;
    }
    case Strategy::kBald: {
      for (const Sentence* s : pool) {
        Rng r = Rng::stream(opts.seed, static_cast<uint64_t>(s->id));
        out.push_back(score_bald(model, *s, opts.bald_passes, r));
      }
      return out;
    }
    case Strategy::kLc:
    case Strategy::kMnlp: {
      std::unordered_map<int64_t, double> by_id;
      Rng eval_rng(0);
      for (const auto& batch : make_batches(pool, opts.batch_size, nullptr)) {
        FormattedBatch fb = format_batch(batch, model.vocab);
        EncoderOutput enc = encode(fb, model, RunMode::kEval, eval_rng);
        for (int64_t b = 0; b < fb.batch; ++b) {
          const Decoding d = decode(enc, model, b);
          by_id[fb.sentence_id[static_cast<size_t>(b)]] =
              strategy == Strategy::kLc ? lc_value(d) : mnlp_value(d);
        }
      }
      for (const Sentence* s : pool) out.push_back({s->id, strategy, by_id.at(s->id)});
      return out;
    }
    case Strategy::kSubmod:
      break;
  }
  throw ParamError("score_pool: strategy has no pointwise score");
}

SelectionResult knapsack_fill(
    const std::vector<std::pair<int64_t, int64_t>>& ranked, int64_t budget) {
  if (budget < 0) throw ParamError("knapsack_fill: negative budget");
  SelectionResult r;
  r.budget = budget;
  int64_t remaining = budget;
  for (const auto& [id, words] : ranked) {
    if (words > remaining) continue;
    r.chosen.push_back(id);
    r.words_used += words;
    remaining -= words;
    if (remaining == 0) break;
  }
  return r;
}

SelectionResult select(Strategy strategy,
                       const std::vector<const Sentence*>& pool,
                       const std::vector<int64_t>& labeled_ids,
                       TaggerModel& model, int64_t budget_words, Rng& rng,
                       const ScoreOptions& opts) {
  if (budget_words < 0) throw ParamError("select: negative budget");
  if (strategy == Strategy::kSubmod) {
    throw ParamError("select: SUBMOD needs the representativeness selector");
  }
  const std::unordered_set<int64_t> labeled(labeled_ids.begin(), labeled_ids.end());
  std::vector<const Sentence*> open;
  open.reserve(pool.size());
  for (const Sentence* s : pool) {
    if (!labeled.count(s->id)) open.push_back(s);
  }

  std::vector<std::pair<int64_t, int64_t>> ranked;
  ranked.reserve(open.size());
  if (strategy == Strategy::kRand) {
    rng.shuffle(open);
    for (const Sentence* s : open) ranked.emplace_back(s->id, s->n_words());
  } else {
    ScoreOptions sopts = opts;
    sopts.seed = rng.next_u64();
    const auto scores = score_pool(model, open, strategy, sopts);
    std::vector<std::pair<double, int64_t>> order;
    order.reserve(scores.size());
    for (const UncertaintyScore& u : scores) order.emplace_back(u.value, u.sentence_id);
    const bool ascending = strategy == Strategy::kMnlp;
    std::sort(order.begin(), order.end(),
              [ascending](const auto& a, const auto& b) {
                if (a.first != b.first) {
                  return ascending ? a.first < b.first : a.first > b.first;
                }
                return a.second < b.second;
              });
    std::unordered_map<int64_t, int64_t> words;
    for (const Sentence* s : open) words[s->id] = s->n_words();
    for (const auto& [value, id] : order) ranked.emplace_back(id, words.at(id));
  }
  return knapsack_fill(ranked, budget_words);
}

}  // namespace seqal
