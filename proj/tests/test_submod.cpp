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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"
#include "seqal/corpus.hpp"
#include "seqal/errors.hpp"
#include "seqal/rng.hpp"
#include "seqal/submod.hpp"
#include "seqal/tagger.hpp"

using namespace seqal;

namespace {

void set_w(SubmodInstance& inst, int64_t a, int64_t b, double w) {
  inst.explicit_w[{std::min(a, b), std::max(a, b)}] = w;
}

// A small instance with explicit similarities, unit weights, given costs.
SubmodInstance explicit_instance() {
  SubmodInstance inst;
  inst.candidate_ids = {0, 1, 2};
  inst.all_unlabeled_ids = {0, 1, 2, 3, 4};
  inst.labeled_ids = {9};
  for (int64_t id : {0, 1, 2, 3, 4, 9}) inst.embeddings[id] = {0, 0};
  // explicit_w overrides the embeddings entirely; self pairs are 0 so an
  // element never covers itself in the hand arithmetic below.
  for (int64_t a : {0, 1, 2, 3, 4, 9})
    for (int64_t b : {0, 1, 2, 3, 4, 9})
      if (a <= b) set_w(inst, a, b, 0.0);
  for (int64_t id : {0, 1, 2, 3, 4}) set_w(inst, id, 9, 0.1);  // base_i = 0.1
  set_w(inst, 0, 3, 0.9);
  set_w(inst, 0, 4, 0.3);
  set_w(inst, 1, 3, 0.5);
  set_w(inst, 1, 4, 0.8);
  set_w(inst, 2, 4, 0.4);
  inst.costs = {{0, 2}, {1, 2}, {2, 1}};
  inst.budget = 4;
  return inst;
}

// Random geometric instance over embedded points.
SubmodInstance random_instance(uint64_t seed, int64_t n_cand, int64_t n_extra,
                               SimilarityKernel kernel, int64_t budget) {
  Rng rng(seed);
  SubmodInstance inst;
  inst.kernel = kernel;
  int64_t next_id = 0;
  for (int64_t i = 0; i < n_cand; ++i) {
    const int64_t id = next_id++;
    inst.candidate_ids.push_back(id);
    inst.all_unlabeled_ids.push_back(id);
    inst.costs[id] = 1 + static_cast<int64_t>(rng.uniform_int(4));
  }
  for (int64_t i = 0; i < n_extra; ++i)
    inst.all_unlabeled_ids.push_back(next_id++);
  inst.labeled_ids.push_back(next_id++);
  for (int64_t id = 0; id < next_id; ++id) {
    std::vector<Real> v(3);
    for (Real& x : v) x = static_cast<Real>(rng.uniform() * 2.0 - 1.0 + 0.01);
    inst.embeddings[id] = v;
  }
  inst.budget = budget;
  return inst;
}

std::vector<std::vector<int64_t>> subsets_of(const std::vector<int64_t>& ids) {
  std::vector<std::vector<int64_t>> out;
  const size_t n = ids.size();
  for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
    std::vector<int64_t> s;
    for (size_t i = 0; i < n; ++i)
      if (mask & (size_t{1} << i)) s.push_back(ids[i]);
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("utility matches the hand-worked oracle on an explicit instance") {
  SubmodInstance inst = explicit_instance();
  inst.validate();

  CHECK(utility(inst, {}) == doctest::Approx(0.0));
  // S={0}: i=0 w=self? candidates cover i via max_{j in S} w(i,j).
  //   i=0: w(0,0)=0 -> max(base,0)=0.1 -> 0          (self similarity is 0 here)
  //   i=3: max(0.1, 0.9) - 0.1 = 0.8
  //   i=4: max(0.1, 0.3) - 0.1 = 0.2
  //   others: 0. total = 1.0
  CHECK(utility(inst, {0}) == doctest::Approx(1.0).epsilon(1e-12));
  // S={1}: i=3 -> 0.4, i=4 -> 0.7. total = 1.1
  CHECK(utility(inst, {1}) == doctest::Approx(1.1).epsilon(1e-12));
  // S={2}: i=4 -> 0.3. total = 0.3
  CHECK(utility(inst, {2}) == doctest::Approx(0.3).epsilon(1e-12));
  // S={0,1}: i=3 -> max(0.9,0.5)-0.1=0.8, i=4 -> max(0.3,0.8)-0.1=0.7 -> 1.5
  CHECK(utility(inst, {0, 1}) == doctest::Approx(1.5).epsilon(1e-12));
  // S={0,1,2}: i=4 similarity max(0.3,0.8,0.4)=0.8, unchanged -> 1.5
  CHECK(utility(inst, {0, 1, 2}) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("weights scale each covered element's contribution") {
  SubmodInstance inst = explicit_instance();
  inst.weights = {{0, 1.0}, {1, 1.0}, {2, 1.0}, {3, 2.0}, {4, 0.5}};
  inst.validate();
  // S={0}: i=3 contributes 2*0.8, i=4 contributes 0.5*0.2 -> 1.7
  CHECK(utility(inst, {0}) == doctest::Approx(1.7).epsilon(1e-12));
}

TEST_CASE("utility is monotone with diminishing gains on random instances") {
  for (uint64_t seed = 0; seed < 6; ++seed) {
    for (SimilarityKernel k :
         {SimilarityKernel::kL1, SimilarityKernel::kL2,
          SimilarityKernel::kCosine}) {
      SubmodInstance inst = random_instance(seed * 3 + 1, 6, 4, k, 100);
      inst.validate();
      Rng rng(seed + 100);

      // Monotone: f(S) <= f(S + e) for sampled S, e.
      // Diminishing: gain(e | S) >= gain(e | T) whenever S subset of T.
      for (int trial = 0; trial < 30; ++trial) {
        std::vector<int64_t> s, t;
        for (int64_t id : inst.candidate_ids) {
          const double u = rng.uniform();
          if (u < 0.3) s.push_back(id);
          if (u < 0.6) t.push_back(id);  // s subset of t
        }
        const int64_t e =
            inst.candidate_ids[rng.uniform_int(inst.candidate_ids.size())];
        if (std::find(t.begin(), t.end(), e) != t.end()) continue;

        auto plus = [&](std::vector<int64_t> v) {
          v.push_back(e);
          return v;
        };
        const double fs = utility(inst, s);
        const double ft = utility(inst, t);
        const double gain_s = utility(inst, plus(s)) - fs;
        const double gain_t = utility(inst, plus(t)) - ft;
        CHECK(fs <= ft + 1e-9);          // monotone along the chain
        CHECK(gain_s >= -1e-12);         // monotone pointwise
        CHECK(gain_s >= gain_t - 1e-9);  // submodular
      }
    }
  }
}

TEST_CASE("streaming result stays within budget and reports its own value") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    SubmodInstance inst = random_instance(seed, 12, 6,
                                          SimilarityKernel::kCosine, 8);
    inst.validate();
    StreamResult r = stream_submod_max(inst, 0.1);
    CHECK(r.cost <= inst.budget);
    int64_t cost = 0;
    for (int64_t id : r.chosen) {
      CHECK(std::find(inst.candidate_ids.begin(), inst.candidate_ids.end(),
                      id) != inst.candidate_ids.end());
      cost += inst.costs.at(id);
    }
    CHECK(cost == r.cost);
    CHECK(r.value == doctest::Approx(utility(inst, r.chosen)).epsilon(1e-12));
    CHECK(std::is_sorted(r.chosen.begin(), r.chosen.end()));
    if (!inst.candidate_ids.empty()) CHECK(r.thresholds >= 1);
  }
}

TEST_CASE("streaming value honors the approximation bound") {
  const double eps = 0.1;
  int checked = 0;
  for (uint64_t seed = 0; seed < 40; ++seed) {
    for (SimilarityKernel k : {SimilarityKernel::kL2,
                               SimilarityKernel::kCosine}) {
      SubmodInstance inst =
          random_instance(seed * 7 + 3, 8, 5, k, 6);
      inst.validate();
      StreamResult r = stream_submod_max(inst, eps);
      BruteForceResult opt = brute_force_opt(inst);
      if (opt.value <= 0) continue;
      const double floor = (1 - eps) * (1 - r.delta) / 2.0 * opt.value;
      CHECK(r.value >= floor - 1e-9);
      ++checked;
    }
  }
  CHECK(checked >= 40);
}

TEST_CASE("the exhaustive optimizer agrees with direct subset enumeration") {
  SubmodInstance inst = explicit_instance();
  BruteForceResult opt = brute_force_opt(inst);
  double best = -1;
  std::vector<int64_t> best_set;
  for (const auto& s : subsets_of(inst.candidate_ids)) {
    int64_t cost = 0;
    for (int64_t id : s) cost += inst.costs.at(id);
    if (cost > inst.budget) continue;
    const double v = utility(inst, s);
    if (v > best) {
      best = v;
      best_set = s;
    }
  }
  CHECK(opt.value == doctest::Approx(best).epsilon(1e-12));
  CHECK(utility(inst, opt.best) == doctest::Approx(best).epsilon(1e-12));

  SubmodInstance big = random_instance(1, 21, 0, SimilarityKernel::kL2, 10);
  CHECK_THROWS_AS(brute_force_opt(big), ParamError);
}

TEST_CASE("dump and restore reproduce utility and streaming exactly") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    SubmodInstance inst = random_instance(seed + 11, 7, 4,
                                          SimilarityKernel::kL1, 7);
    inst.validate();
    const std::string csv = dump_instance(inst);
    SubmodInstance back = restore_instance(csv);
    back.validate();

    CHECK(back.budget == inst.budget);
    CHECK(back.candidate_ids == inst.candidate_ids);

    Rng rng(seed);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<int64_t> s;
      for (int64_t id : inst.candidate_ids)
        if (rng.uniform() < 0.4) s.push_back(id);
      CHECK(utility(back, s) ==
            doctest::Approx(utility(inst, s)).epsilon(1e-9));
    }
    StreamResult a = stream_submod_max(inst, 0.1);
    StreamResult b = stream_submod_max(back, 0.1);
    CHECK(a.chosen == b.chosen);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));
  }
}

TEST_CASE("similarity kernels stay inside their documented ranges") {
  SubmodInstance inst = random_instance(3, 8, 4, SimilarityKernel::kL1, 5);
  for (SimilarityKernel k : {SimilarityKernel::kL1, SimilarityKernel::kL2,
                             SimilarityKernel::kCosine}) {
    inst.kernel = k;
    SimilarityTable table(inst);
    for (int64_t a : inst.all_unlabeled_ids) {
      for (int64_t b : inst.all_unlabeled_ids) {
        const double w = table.w(a, b);
        CHECK(w >= -1e-12);
        CHECK(w == table.w(b, a));  // symmetric
        if (k == SimilarityKernel::kCosine) CHECK(w <= 2.0 + 1e-12);
      }
    }
  }

  // A zero vector has no direction; the cosine kernel must refuse it.
  inst.kernel = SimilarityKernel::kCosine;
  inst.embeddings[inst.all_unlabeled_ids[0]] = {0, 0, 0};
  CHECK_THROWS_AS(SimilarityTable{inst}, ParamError);
}

TEST_CASE("kernel and embedding names round trip") {
  for (SimilarityKernel k : {SimilarityKernel::kL1, SimilarityKernel::kL2,
                             SimilarityKernel::kCosine}) {
    CHECK(parse_kernel(kernel_name(k)) == k);
  }
  for (SentenceEmbedding e :
       {SentenceEmbedding::kAvgWordEmb, SentenceEmbedding::kAvgEncoder}) {
    CHECK(parse_embedding(embedding_name(e)) == e);
  }
  CHECK_THROWS_AS(parse_kernel("rbf"), ParamError);
  CHECK_THROWS_AS(parse_embedding("cls"), ParamError);
}

TEST_CASE("instance validation rejects structural defects") {
  SubmodInstance good = explicit_instance();
  good.validate();

  SubmodInstance overlap = good;
  overlap.labeled_ids.push_back(0);  // 0 is also a candidate
  CHECK_THROWS_AS(overlap.validate(), ContractError);

  SubmodInstance orphan = good;
  orphan.candidate_ids.push_back(77);  // not in all_unlabeled_ids
  CHECK_THROWS_AS(orphan.validate(), ContractError);

  SubmodInstance nocost = good;
  nocost.costs.erase(1);
  CHECK_THROWS_AS(nocost.validate(), ContractError);

  SubmodInstance negbudget = good;
  negbudget.budget = -1;
  CHECK_THROWS_AS(negbudget.validate(), ContractError);
}

TEST_CASE("the full selector is deterministic and budget-safe") {
  // Small synthetic pool; model is random-init, which is fine: the selector
  // only needs consistent scores and embeddings.
  Corpus corpus;
  corpus.scheme = TagScheme::kBio;
  corpus.entity_types.insert("X");
  const std::vector<std::vector<std::string>> rows = {
      {"ash", "birch", "cedar"},
      {"dune", "ridge", "mesa", "butte"},
      {"fern", "moss"},
      {"gale", "storm", "breeze"},
      {"iris", "lily", "rose", "vine", "reed"},
      {"kelp", "wrack"},
      {"loam", "silt", "clay"},
      {"peak", "crag", "cliff", "scree"},
  };
  for (size_t i = 0; i < rows.size(); ++i) {
    Sentence s;
    s.id = static_cast<int64_t>(i);
    s.tokens = rows[i];
    s.tags.assign(s.tokens.size(), "O");
    if (i % 3 == 0) s.tags[0] = "B-X";
    corpus.sentences.push_back(s);
  }
  Vocabulary vocab = build_vocabulary(corpus);
  TaggerConfig cfg;
  cfg.char_encoder.cnn = {1, 4, 3};
  cfg.word_encoder.cnn = {1, 6, 3};
  cfg.decoder = DecoderKind::kLstm;
  cfg.decoder_units = 5;
  cfg.char_emb_dim = 3;
  cfg.emb_dim = 4;
  cfg.dropout_p = 0.0;
  Rng rng(21);
  TaggerModel model(cfg, vocab, rng);

  std::vector<const Sentence*> pool, labeled;
  for (size_t i = 0; i < corpus.sentences.size(); ++i) {
    (i < 2 ? labeled : pool).push_back(&corpus.sentences[i]);
  }

  SubmodSelectOptions opts;
  opts.t = 2;
  Rng r1(4), r2(4);
  SelectionResult a = submod_select(model, pool, labeled, 9, r1, opts);
  SelectionResult b = submod_select(model, pool, labeled, 9, r2, opts);
  CHECK(a.chosen == b.chosen);
  CHECK(a.words_used == b.words_used);
  CHECK(a.words_used <= 9);
  CHECK(!a.chosen.empty());
  for (int64_t id : a.chosen) {
    CHECK(id >= 2);  // labeled ids 0,1 never selected
    bool in_pool = false;
    for (const Sentence* s : pool) in_pool |= (s->id == id);
    CHECK(in_pool);
  }

  // Both embeddings produce finite vectors of the expected width.
  for (SentenceEmbedding e :
       {SentenceEmbedding::kAvgWordEmb, SentenceEmbedding::kAvgEncoder}) {
    std::vector<Real> v = embed_sentence(*pool[0], model, e);
    CHECK(!v.empty());
    for (Real x : v) CHECK(std::isfinite(static_cast<double>(x)));
  }
}
