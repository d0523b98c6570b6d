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

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"
#include "seqal/corpus.hpp"
#include "seqal/tagger.hpp"

using namespace seqal;

namespace {

TaggerConfig micro_config(DecoderKind dec) {
  TaggerConfig c;
  c.char_encoder.cnn = {1, 4, 3};
  c.word_encoder.cnn = {1, 6, 3};
  c.decoder = dec;
  c.decoder_units = 5;
  c.char_emb_dim = 3;
  c.emb_dim = 4;
  c.dropout_p = 0.0;
  c.word_drop_p = 0.0;
  return c;
}

// One entity type under BIO; O / B-X / I-X all occur, so the model decodes
// over exactly three output tags.
Corpus bio_corpus() {
  Corpus c;
  c.scheme = TagScheme::kBio;
  c.entity_types.insert("X");
  const char* words[] = {"aa", "bb", "cc", "dd", "ee", "ff", "gg", "hh"};
  const char* cycle[] = {"O", "B-X", "I-X"};  // valid BIO when repeated
  for (int64_t id = 0; id < 8; ++id) {
    Sentence s;
    s.id = id;
    for (int64_t k = 0; k <= id % 5; ++k) {
      s.tokens.push_back(words[(id + k) % 8]);
      s.tags.push_back(cycle[k % 3]);
    }
    c.sentences.push_back(s);
  }
  return c;
}

// Every length-n tag sequence over T tags.
std::vector<std::vector<int32_t>> all_sequences(int64_t n, int32_t t_tags) {
  std::vector<std::vector<int32_t>> out;
  std::vector<int32_t> cur(static_cast<size_t>(n), 0);
  while (true) {
    out.push_back(cur);
    int64_t i = n - 1;
    for (; i >= 0; --i) {
      if (++cur[static_cast<size_t>(i)] < t_tags) break;
      cur[static_cast<size_t>(i)] = 0;
    }
    if (i < 0) break;
  }
  return out;
}

double log_sum_exp_vec(const std::vector<double>& xs) {
  double mx = xs[0];
  for (double x : xs) mx = std::max(mx, x);
  double acc = 0;
  for (double x : xs) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

}  // namespace

TEST_CASE("crf partition and viterbi match exhaustive enumeration") {
  Corpus corpus = bio_corpus();
  Vocabulary vocab = build_vocabulary(corpus);
  const int32_t t_tags = static_cast<int32_t>(vocab.n_output_tags());
  REQUIRE(t_tags == 3);

  for (uint64_t seed = 0; seed < 8; ++seed) {
    Rng rng(seed);
    TaggerModel model(micro_config(DecoderKind::kCrf), vocab, rng);
    for (const Sentence& s : corpus.sentences) {
      if (s.n_words() > 5) continue;
      FormattedBatch fb = format_batch({&s}, vocab);
      Rng re(0);
      EncoderOutput enc = encode(fb, model, RunMode::kEval, re);

      std::vector<double> scores;
      double best = -1e300;
      std::vector<int32_t> best_seq;
      for (const auto& seq : all_sequences(s.n_words(), t_tags)) {
        const double sc = crf_path_score(enc, model, seq, 0);
        scores.push_back(sc);
        if (sc > best) {
          best = sc;
          best_seq = seq;
        }
      }
      const double log_z = log_sum_exp_vec(scores);
      CHECK(crf_log_partition(enc, model, 0) ==
            doctest::Approx(log_z).epsilon(1e-10));

      Decoding vit = crf_viterbi(enc, model, 0);
      CHECK(vit.tags == best_seq);
      CHECK(vit.log_prob == doctest::Approx(best - log_z).epsilon(1e-10));
      const double step_sum = std::accumulate(vit.step_log_probs.begin(),
                                              vit.step_log_probs.end(), 0.0);
      CHECK(step_sum == doctest::Approx(vit.log_prob).epsilon(1e-9));
    }
  }
}

TEST_CASE("beam width one reproduces greedy decoding") {
  Corpus corpus = bio_corpus();
  Vocabulary vocab = build_vocabulary(corpus);
  for (uint64_t seed = 0; seed < 12; ++seed) {
    Rng rng(seed);
    TaggerModel model(micro_config(DecoderKind::kLstm), vocab, rng);
    for (const Sentence& s : corpus.sentences) {
      FormattedBatch fb = format_batch({&s}, vocab);
      Rng re(0);
      EncoderOutput enc = encode(fb, model, RunMode::kEval, re);
      Decoding g = decode_greedy(enc, model, 0);
      Decoding b = decode_beam(enc, model, 1, 0);
      CHECK(g.tags == b.tags);
      CHECK(g.log_prob == doctest::Approx(b.log_prob).epsilon(1e-12));
    }
  }
}

TEST_CASE("a full-width beam finds the exhaustive argmax") {
  Corpus corpus = bio_corpus();
  Vocabulary vocab = build_vocabulary(corpus);
  const int32_t t_tags = static_cast<int32_t>(vocab.n_output_tags());

  for (uint64_t seed = 20; seed < 26; ++seed) {
    Rng rng(seed);
    TaggerModel model(micro_config(DecoderKind::kLstm), vocab, rng);
    for (const Sentence& s : corpus.sentences) {
      if (s.n_words() > 4) continue;
      FormattedBatch fb = format_batch({&s}, vocab);
      Rng re(0);
      EncoderOutput enc = encode(fb, model, RunMode::kEval, re);

      double best = -1e300;
      std::vector<int32_t> best_seq;
      for (const auto& seq : all_sequences(s.n_words(), t_tags)) {
        const double lp = sequence_log_prob(enc, model, seq, 0);
        if (lp > best + 1e-15) {
          best = lp;
          best_seq = seq;
        }
      }
      int64_t width = 1;
      for (int64_t i = 0; i < s.n_words(); ++i) width *= t_tags;
      Decoding b = decode_beam(enc, model, width, 0);
      CHECK(b.tags == best_seq);
      CHECK(b.log_prob == doctest::Approx(best).epsilon(1e-10));
    }
  }
}

TEST_CASE("beam log probability never degrades as the width grows") {
  Corpus corpus = bio_corpus();
  Vocabulary vocab = build_vocabulary(corpus);
  for (uint64_t seed = 40; seed < 44; ++seed) {
    Rng rng(seed);
    TaggerModel model(micro_config(DecoderKind::kLstm), vocab, rng);
    const Sentence& s = corpus.sentences[4];
    FormattedBatch fb = format_batch({&s}, vocab);
    Rng re(0);
    EncoderOutput enc = encode(fb, model, RunMode::kEval, re);
    double prev = -1e300;
    for (int64_t w = 1; w <= 12; ++w) {
      Decoding d = decode_beam(enc, model, w, 0);
      CHECK(d.log_prob >= prev - 1e-12);
      prev = d.log_prob;
    }
  }
}

TEST_CASE("lstm decoding bookkeeping stays consistent") {
  Corpus corpus = bio_corpus();
  Vocabulary vocab = build_vocabulary(corpus);
  Rng rng(77);
  TaggerModel model(micro_config(DecoderKind::kLstm), vocab, rng);
  for (const Sentence& s : corpus.sentences) {
    FormattedBatch fb = format_batch({&s}, vocab);
    Rng re(0);
    EncoderOutput enc = encode(fb, model, RunMode::kEval, re);
    Decoding d = decode_greedy(enc, model, 0);
    REQUIRE(static_cast<int64_t>(d.tags.size()) == s.n_words());
    REQUIRE(d.tags.size() == d.step_log_probs.size());
    const double sum = std::accumulate(d.step_log_probs.begin(),
                                       d.step_log_probs.end(), 0.0);
    CHECK(sum == doctest::Approx(d.log_prob).epsilon(1e-9));
    CHECK(d.log_prob <= 1e-12);
    // The decoded sequence's own log prob agrees with the decoder's claim.
    CHECK(sequence_log_prob(enc, model, d.tags, 0) ==
          doctest::Approx(d.log_prob).epsilon(1e-9));
    for (int32_t t : d.tags) {
      CHECK(t >= 0);
      CHECK(t < static_cast<int32_t>(vocab.n_output_tags()));
    }
  }
}

TEST_CASE("crf probabilities normalize over the sequence space") {
  Corpus corpus = bio_corpus();
  Vocabulary vocab = build_vocabulary(corpus);
  const int32_t t_tags = static_cast<int32_t>(vocab.n_output_tags());
  Rng rng(5);
  TaggerModel model(micro_config(DecoderKind::kCrf), vocab, rng);
  const Sentence& s = corpus.sentences[2];
  REQUIRE(s.n_words() == 3);
  FormattedBatch fb = format_batch({&s}, vocab);
  Rng re(0);
  EncoderOutput enc = encode(fb, model, RunMode::kEval, re);
  const double log_z = crf_log_partition(enc, model, 0);
  double total = 0;
  for (const auto& seq : all_sequences(s.n_words(), t_tags)) {
    total += std::exp(crf_path_score(enc, model, seq, 0) - log_z);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}
