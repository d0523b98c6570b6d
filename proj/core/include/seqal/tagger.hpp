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

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "seqal/corpus.hpp"
#include "seqal/tape.hpp"

namespace seqal {

enum class EncoderKind { kCnn, kLstm };
enum class DecoderKind { kLstm, kCrf };

// What a forward pass is for. Dropout is live in kTrain and kMcDropout;
// word-drop (replacing word ids by [UNK], characters untouched) only in
// kTrain.
enum class RunMode { kTrain, kEval, kMcDropout };

struct CnnSpec {
  int layers = 1;
  int filters = 25;
  int width = 3;
};

struct CharEncoderConfig {
  EncoderKind kind = EncoderKind::kCnn;
  CnnSpec cnn;
  int lstm_units = 25;  // per direction; output width is 2x this
};

struct WordEncoderConfig {
  EncoderKind kind = EncoderKind::kCnn;
  CnnSpec cnn{2, 64, 3};
  int lstm_layers = 1;
  int lstm_units = 50;  // per direction
};

struct TaggerConfig {
  CharEncoderConfig char_encoder;
  WordEncoderConfig word_encoder;
  DecoderKind decoder = DecoderKind::kLstm;
  int decoder_units = 64;  // LSTM width; also the previous-tag embedding size
  int char_emb_dim = 16;
  int emb_dim = 32;
  double dropout_p = 0.5;
  double word_drop_p = 0.5;

  void validate() const;  // ParamError on out-of-domain fields
  int char_out_dim() const;
  int word_out_dim() const;

  // Small configuration for simulation studies on a laptop-class machine.
  static TaggerConfig desk();
  // The full-scale configuration the architecture is normally run at.
  static TaggerConfig paper();
};

struct TaggerModel {
  TaggerConfig config;
  Vocabulary vocab;
  ParamStore params;

  TaggerModel(TaggerConfig cfg, Vocabulary vocab, Rng& rng,
              const EmbeddingTable* pretrained = nullptr);

  int64_t n_output_tags() const { return vocab.n_output_tags(); }
  int64_t enc_dim() const;
};

// Encoder pass over one formatted batch. Owns the tape that produced it so
// training can keep building the loss on top and inference can read values.
struct EncoderOutput {
  Tape tape;
  Var w_char;  // [batch*padded_len x char_out]
  Var w_full;  // [batch*padded_len x char_out+emb], zeroed at [PAD] positions
  Var h_top;   // [batch*padded_len x word_out] top encoder layer
  Var h_enc;   // [batch*padded_len x word_out+char_out+emb]
  FormattedBatch fb;
};

// Full encoder: character features, word features with word-drop, the word
// encoder stack, and h_enc = [h_top | w_full].
EncoderOutput encode(const FormattedBatch& fb, TaggerModel& model, RunMode mode,
                     Rng& rng);

// Character-level features alone (value snapshot).
Tensor encode_chars(const FormattedBatch& fb, TaggerModel& model, RunMode mode,
                    Rng& rng);
// Concatenated [w_char | word embedding] rows (value snapshot).
Tensor word_features(const FormattedBatch& fb, TaggerModel& model, RunMode mode,
                     Rng& rng);

// One decoded sentence. step_log_probs are per real position and sum to
// log_prob exactly.
struct Decoding {
  std::vector<int32_t> tags;
  double log_prob = 0;
  std::vector<double> step_log_probs;
};

// Greedy LSTM decode of one batch row; ties pick the lowest tag id.
Decoding decode_greedy(const EncoderOutput& enc, const TaggerModel& model,
                       int64_t row = 0);
// Beam search; beam_width == 1 matches decode_greedy exactly, and a beam at
// least as large as the sequence count is exhaustive. Ties order by log prob
// then lexicographically smaller tag sequence.
Decoding decode_beam(const EncoderOutput& enc, const TaggerModel& model,
                     int64_t beam_width, int64_t row = 0);
// Log probability the LSTM decoder assigns to a given tag sequence for a row.
double sequence_log_prob(const EncoderOutput& enc, const TaggerModel& model,
                         const std::vector<int32_t>& tags, int64_t row = 0);

// CRF quantities for one batch row (decoder must be kCrf).
double crf_log_partition(const EncoderOutput& enc, const TaggerModel& model,
                         int64_t row = 0);
// Viterbi path; log_prob is path score minus log partition, and
// step_log_probs are the chain-rule conditionals, so they sum to log_prob.
Decoding crf_viterbi(const EncoderOutput& enc, const TaggerModel& model,
                     int64_t row = 0);
// Unnormalized path score of a tag sequence under the CRF.
double crf_path_score(const EncoderOutput& enc, const TaggerModel& model,
                      const std::vector<int32_t>& tags, int64_t row = 0);

// Decodes with whatever decoder the model has.
Decoding decode(const EncoderOutput& enc, const TaggerModel& model,
                int64_t row = 0);

struct LossBuild {
  Var loss;        // scalar: mean per-word negative log likelihood
  int64_t words;   // real words contributing
};
// Builds the training loss (teacher forcing for the LSTM decoder; exact
// partition for the CRF) on the given tape.
LossBuild build_sequence_nll(Tape& tape, const FormattedBatch& fb,
                             TaggerModel& model, RunMode mode, Rng& rng);
// Value-only convenience.
double sequence_nll(const FormattedBatch& fb, TaggerModel& model, RunMode mode,
                    Rng& rng);

struct TrainOptions {
  double lr = 0.3;
  int64_t batch_size = 32;
  double clip_norm = 5.0;
};

struct TrainStats {
  double mean_loss = 0;
  int64_t words = 0;
  int64_t batches = 0;
};

// One pass of minibatch SGD over the sentences: shuffle, bucket, and for each
// batch run forward/backward, clip the global gradient norm, and update.
TrainStats train_epoch(TaggerModel& model,
                       const std::vector<const Sentence*>& sentences,
                       const TrainOptions& opts, Rng& rng);

// Single-file model serialization: a text header (config and vocabulary)
// followed by the binary parameter checkpoint. Exact round trip.
void save_model(const TaggerModel& model, std::ostream& out);
TaggerModel load_model(std::istream& in);
void save_model_file(const TaggerModel& model, const std::string& path);
TaggerModel load_model_file(const std::string& path);

}  // namespace seqal
