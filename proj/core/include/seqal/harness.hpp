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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "seqal/active.hpp"
#include "seqal/corpus.hpp"
#include "seqal/submod.hpp"
#include "seqal/tagger.hpp"

namespace seqal {

struct SubmodParams {
  int64_t t = 4;
  double eps = 0.1;
  SimilarityKernel kernel = SimilarityKernel::kCosine;
  SentenceEmbedding embedding = SentenceEmbedding::kAvgWordEmb;
  bool weighted = true;
};

// Everything one simulation run depends on. A run is a pure function of
// (config, corpora): the seed drives model init, the warm-start draw,
// training order, dropout, and selection.
struct ExperimentConfig {
  Strategy strategy = Strategy::kMnlp;
  int64_t rounds = 10;
  int64_t budget_per_round = 1500;     // words per round
  double warm_start_fraction = 0.01;   // of corpus words, in (0, 1]
  int64_t passes_per_round = 5;        // training epochs after each annotation
  // Lower bound on word updates per training phase. Small early labeled sets
  // repeat until they hit this floor, so the model a strategy scores with is
  // never wildly underfit; once the labeled set is large the floor is inert.
  int64_t train_word_floor = 60000;
  uint64_t seed = 0;
  std::string preset = "desk";         // "desk" or "paper"
  std::string decoder = "lstm";        // "lstm" or "crf"
  int64_t bald_passes = 8;
  SubmodParams submod;
  double lr = 0.3;
  int64_t batch_size = 32;
  double clip_norm = 5.0;
  int64_t unk_threshold = 1;
  // Full-corpus reference training length; sized so the baseline sees a word
  // budget comparable to a whole simulation's cumulative updates.
  int64_t full_baseline_epochs = 14;
  // When set, the warm start draws no sentence of this genre (they all start
  // in the pool).
  std::optional<std::string> exclude_genre_warm_start;

  void validate() const;
  TaggerConfig tagger_config() const;  // ParamError on unknown preset/decoder
};

struct CurvePoint {
  int64_t round = 0;
  int64_t words = 0;      // cumulative annotated words (warm start included)
  double percent = 0;     // 100 * words / corpus words
  double f1 = 0;          // test span F1 in [0, 100]
  double seconds = 0;     // wall clock since run start (nondeterministic)
};

struct LearningCurve {
  std::vector<CurvePoint> points;
};

// Trapezoidal area under (words, f1).
double curve_auc(const LearningCurve& curve);

struct TypePrf {
  int64_t gold = 0, predicted = 0, correct = 0;
  double precision = 0, recall = 0, f1 = 0;
};

struct F1Report {
  double precision = 0, recall = 0, f1 = 0;  // all in [0, 100]
  int64_t gold = 0, predicted = 0, correct = 0;
  std::map<std::string, TypePrf> by_type;
};

// Exact-span match: a predicted span counts iff type, start, and end all
// equal a gold span's. Predictions are decoded tolerantly (malformed model
// output drops, never throws).
F1Report evaluate_span_f1(TaggerModel& model, const Corpus& corpus,
                          int64_t batch_size = 32);

struct ExperimentResult {
  LearningCurve curve;
  std::vector<SelectionResult> selections;  // one per completed round
  std::vector<int64_t> final_pool_ids;      // ascending, still unlabeled
  std::optional<TaggerModel> model;         // weights after the last round
  int64_t corpus_words = 0;
};

// The simulation loop: seeded warm start, then per round score the pool with
// a frozen model, select under the word budget, reveal gold tags, continue
// training on all labeled data, and evaluate. Truncates cleanly when the pool
// runs dry.
ExperimentResult run_active_learning(const ExperimentConfig& cfg,
                                     const Corpus& corpus, const Corpus& test);

// Fresh model trained on the whole corpus for full_baseline_epochs; the
// ceiling that learning curves are compared against.
double full_data_f1(const ExperimentConfig& cfg, const Corpus& corpus,
                    const Corpus& test);

struct ReplicateRow {
  int64_t round = 0;
  double words_mean = 0;
  double percent_mean = 0;
  double f1_mean = 0;
  double f1_stddev = 0;  // population stddev over seeds
};

struct ReplicateResult {
  std::vector<LearningCurve> curves;  // seed = cfg.seed + index
  std::vector<ReplicateRow> aggregate;
};

ReplicateResult replicate(const ExperimentConfig& cfg, const Corpus& corpus,
                          const Corpus& test, int64_t n_seeds);

// Counts selection ids per genre; sentences without a genre land under
// "unknown". Sum of counts equals the selection size.
std::map<std::string, int64_t> genre_histogram(const SelectionResult& sel,
                                               const Corpus& corpus);

struct GenreProbeResult {
  std::map<std::string, int64_t> biased;    // histogram, excluded warm start
  std::map<std::string, int64_t> unbiased;  // histogram, plain warm start
  double biased_share = 0;    // excluded genre's share of the biased pick
  double unbiased_share = 0;
};

// Paired first-round probe: warm-start with and without the genre excluded
// (same seed), train, select one budget's worth, and compare how much of the
// excluded genre each model picks.
GenreProbeResult genre_bias_probe(const ExperimentConfig& cfg,
                                  const Corpus& corpus,
                                  const std::string& excluded_genre);

struct BenchRow {
  int entity_types = 0;
  int64_t output_tags = 0;
  std::string decoder;  // "lstm" or "crf"
  double sec_per_epoch = 0;
};

// Times one training epoch per decoder on generated corpora with the given
// entity-type counts. Both decoders consume identical formatted batches; one
// warm-up epoch is discarded and the median of timed_epochs timings is kept.
std::vector<BenchRow> bench_decoder(const std::vector<int>& type_counts,
                                    const TaggerConfig& base_cfg,
                                    int64_t n_sentences, int64_t batch_size,
                                    uint64_t seed, int64_t timed_epochs = 3);

// CSV renderings. Reals are fixed at six decimals so identical runs are
// byte-identical; the curve's seconds column is the one wall-clock field.
std::string curve_csv(const LearningCurve& curve);
std::string replicate_csv(const ReplicateResult& rep);
std::string scores_csv(const std::vector<UncertaintyScore>& scores,
                       const Corpus& corpus);
std::string histogram_csv(const std::map<std::string, int64_t>& hist);
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace seqal
