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
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seqal/active.hpp"
#include "seqal/corpus.hpp"
#include "seqal/tagger.hpp"

namespace seqal {

enum class SimilarityKernel { kL1, kL2, kCosine };
enum class SentenceEmbedding { kAvgWordEmb, kAvgEncoder };

std::string kernel_name(SimilarityKernel k);
SimilarityKernel parse_kernel(const std::string& name);
std::string embedding_name(SentenceEmbedding e);
SentenceEmbedding parse_embedding(const std::string& name);

// One representativeness-selection problem. The utility of a set S of
// candidates is
//
//   f(S) = sum over i in all_unlabeled_ids of
//          us_i * (max(base_i, max_{j in S} w(i,j)) - base_i)
//
// where base_i = max_{j in labeled} w(i,j) (0 when no labeled ids), us_i is 1
// unless weights are given, and w is the kernel similarity. Adding elements
// can only raise the inner max, so f is monotone; the max structure makes it
// submodular.
struct SubmodInstance {
  std::vector<int64_t> candidate_ids;     // selectable; ascending stream order
  std::vector<int64_t> all_unlabeled_ids; // utility sum domain; superset of candidates
  std::vector<int64_t> labeled_ids;
  std::unordered_map<int64_t, std::vector<Real>> embeddings;
  SimilarityKernel kernel = SimilarityKernel::kCosine;
  // Similarity overrides keyed by unordered id pair; when non-empty, w(i,j)
  // reads these instead of the embeddings (restored-from-CSV instances).
  std::map<std::pair<int64_t, int64_t>, double> explicit_w;
  std::unordered_map<int64_t, double> weights;  // empty = unweighted
  std::unordered_map<int64_t, int64_t> costs;   // per candidate, words
  int64_t budget = 0;

  // ContractError when ids overlap, a candidate is outside all_unlabeled,
  // costs or weights are missing/invalid, or the budget is negative.
  void validate() const;
};

// Pairwise similarity accessor. For L1/L2 kernels w(a,b) = d - dist(a,b)
// where d is the largest pairwise distance over the ids the instance carries,
// so every similarity is >= 0. For COSINE w = 1 + cos in [0, 2]; a zero
// vector raises ParamError.
class SimilarityTable {
 public:
  explicit SimilarityTable(const SubmodInstance& inst);
  double w(int64_t a, int64_t b) const;
  double distance_cap() const { return d_; }

 private:
  const SubmodInstance* inst_;
  double d_ = 0;
};

// Exact f(S); S must be a subset of candidate_ids.
double utility(const SubmodInstance& inst, const std::vector<int64_t>& s);

struct StreamResult {
  std::vector<int64_t> chosen;  // ascending id order
  double value = 0;             // f(chosen)
  int64_t cost = 0;
  double m = 0;       // best single-element value per unit cost
  double delta = 0;   // max chosen cost / budget (the bound's delta)
  int64_t thresholds = 0;
};

// Two-pass streaming maximization under the knapsack constraint: pass 1 finds
// m over feasible singletons; thresholds v = (1+eps)^i span [m, K*m]; pass 2
// streams candidates in id order and adds e to S_v when it fits and
// gain(e | S_v) >= cost(e) * (v/2 - f(S_v)) / (K - cost(S_v)). Returns the
// best S_v. Guarantee: f >= (1-eps)(1-delta)/2 * OPT.
StreamResult stream_submod_max(const SubmodInstance& inst, double eps);

struct BruteForceResult {
  std::vector<int64_t> best;
  double value = 0;
};

// Exhaustive optimum over feasible candidate subsets; ParamError when the
// candidate count exceeds 20.
BruteForceResult brute_force_opt(const SubmodInstance& inst);

// Debug round trip. The dump folds the labeled set into one pseudo id (-1)
// whose similarities equal each candidate's base_i, then writes
// "#budget,K", "#item,id,cost,weight" lines and "i,j,w" triples. The restored
// instance reproduces utility and stream_submod_max exactly.
std::string dump_instance(const SubmodInstance& inst);
SubmodInstance restore_instance(const std::string& csv);

// Mean word-embedding rows (kAvgWordEmb) or mean encoder rows (kAvgEncoder)
// over the real positions of the sentence.
std::vector<Real> embed_sentence(const Sentence& s, TaggerModel& model,
                                 SentenceEmbedding kind);

struct SubmodSelectOptions {
  int64_t t = 4;           // candidate restriction: top uncertain until t*K words
  double eps = 0.1;
  Strategy base = Strategy::kMnlp;
  SentenceEmbedding embedding = SentenceEmbedding::kAvgWordEmb;
  SimilarityKernel kernel = SimilarityKernel::kCosine;
  bool weighted = true;
  int64_t batch_size = 32;
};

// Full selector: rank the pool by the base strategy, keep the top candidates
// until their word count reaches t*K, build the instance (weights
// 1 - exp(MNLP) when weighted), stream-maximize, and return the chosen set in
// base-rank order for budget accounting.
SelectionResult submod_select(TaggerModel& model,
                              const std::vector<const Sentence*>& pool,
                              const std::vector<const Sentence*>& labeled,
                              int64_t budget_words, Rng& rng,
                              const SubmodSelectOptions& opts = {});

}  // namespace seqal
