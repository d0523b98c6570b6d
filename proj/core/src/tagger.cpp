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

#include "seqal/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "seqal/checkpoint.hpp"
#include "seqal/crf.hpp"
#include "seqal/nnmath.hpp"

namespace seqal {

namespace {

void check_cnn(const CnnSpec& s, const std::string& where) {
  if (s.layers < 1) throw ParamError(where + ": layers must be >= 1");
  if (s.filters < 1) throw ParamError(where + ": filters must be >= 1");
  if (s.width < 1 || s.width % 2 == 0) {
    throw ParamError(where + ": width must be odd and >= 1");
  }
}

}  // namespace

void TaggerConfig::validate() const {
  if (char_encoder.kind == EncoderKind::kCnn) {
    check_cnn(char_encoder.cnn, "char encoder");
  } else if (char_encoder.lstm_units < 1) {
    throw ParamError("char encoder: lstm_units must be >= 1");
  }
  if (word_encoder.kind == EncoderKind::kCnn) {
    check_cnn(word_encoder.cnn, "word encoder");
  } else if (word_encoder.lstm_units < 1 || word_encoder.lstm_layers < 1) {
    throw ParamError("word encoder: lstm layers and units must be >= 1");
  }
  if (decoder_units < 1) throw ParamError("decoder_units must be >= 1");
  if (char_emb_dim < 1 || emb_dim < 1) throw ParamError("embedding dims must be >= 1");
  if (dropout_p < 0 || dropout_p >= 1) throw ParamError("dropout_p must be in [0, 1)");
  if (word_drop_p < 0 || word_drop_p > 1) throw ParamError("word_drop_p must be in [0, 1]");
}

int TaggerConfig::char_out_dim() const {
  return char_encoder.kind == EncoderKind::kCnn ? char_encoder.cnn.filters
                                                : 2 * char_encoder.lstm_units;
}

int TaggerConfig::word_out_dim() const {
  return word_encoder.kind == EncoderKind::kCnn ? word_encoder.cnn.filters
                                                : 2 * word_encoder.lstm_units;
}

TaggerConfig TaggerConfig::desk() {
  TaggerConfig c;
  c.char_encoder.cnn = {1, 25, 3};
  c.word_encoder.cnn = {2, 64, 3};
  c.decoder_units = 32;
  c.char_emb_dim = 16;
  c.emb_dim = 32;
  return c;
}

TaggerConfig TaggerConfig::paper() {
  TaggerConfig c;
  c.char_encoder.cnn = {1, 50, 3};
  c.word_encoder.cnn = {2, 800, 5};
  c.decoder_units = 100;
  c.char_emb_dim = 25;
  c.emb_dim = 100;
  return c;
}

TaggerModel::TaggerModel(TaggerConfig cfg, Vocabulary voc, Rng& rng,
                         const EmbeddingTable* pretrained)
    : config(cfg), vocab(std::move(voc)) {
  config.validate();
  const int64_t ce = config.char_emb_dim;
  const int64_t we = config.emb_dim;
  const int64_t t_out = vocab.n_output_tags();
  if (t_out < 1) throw ContractError("TaggerModel: vocabulary has no output tags");

  auto add_glorot = [&](const std::string& name, std::vector<int64_t> shape,
                        int64_t fan_in, int64_t fan_out) -> Parameter& {
    Parameter& p = params.add(name, std::move(shape));
    init_uniform_glorot(p.value, fan_in, fan_out, rng);
    return p;
  };
  auto add_lstm = [&](const std::string& prefix, int64_t in_dim, int64_t units) {
    add_glorot(prefix + "_wx", {in_dim, 4 * units}, in_dim, 4 * units);
    add_glorot(prefix + "_wh", {units, 4 * units}, units, 4 * units);
    Parameter& b = params.add(prefix + "_b", {4 * units});
    // Forget gate bias starts at one.
    for (int64_t j = units; j < 2 * units; ++j) b.value.at(j) = Real(1);
  };

  add_glorot("char_emb", {vocab.n_chars(), ce}, ce, ce);
  if (config.char_encoder.kind == EncoderKind::kCnn) {
    const CnnSpec& s = config.char_encoder.cnn;
    int64_t in = ce;
    for (int l = 0; l < s.layers; ++l) {
      add_glorot("char_conv" + std::to_string(l) + "_k", {s.width, in, s.filters},
                 s.width * in, s.width * s.filters);
      params.add("char_conv" + std::to_string(l) + "_b", {s.filters});
      in = s.filters;
    }
  } else {
    add_lstm("char_lstm_fwd", ce, config.char_encoder.lstm_units);
    add_lstm("char_lstm_bwd", ce, config.char_encoder.lstm_units);
  }

  add_glorot("word_emb", {vocab.n_words(), we}, we, we);
  if (pretrained) {
    Parameter& emb = params.at("word_emb");
    if (pretrained->dim != we) {
      throw ParamError("TaggerModel: pretrained dim " + std::to_string(pretrained->dim) +
                       " vs emb_dim " + std::to_string(we));
    }
    for (int64_t w = 0; w < vocab.n_words(); ++w) {
      auto it = pretrained->vectors.find(vocab.id_to_word[static_cast<size_t>(w)]);
      if (it == pretrained->vectors.end()) continue;
      for (int64_t j = 0; j < we; ++j) emb.value.at2(w, j) = it->second[static_cast<size_t>(j)];
    }
  }

  const int64_t w_in = config.char_out_dim() + we;
  if (config.word_encoder.kind == EncoderKind::kCnn) {
    const CnnSpec& s = config.word_encoder.cnn;
    int64_t in = w_in;
    for (int l = 0; l < s.layers; ++l) {
      add_glorot("word_conv" + std::to_string(l) + "_k", {s.width, in, s.filters},
                 s.width * in, s.width * s.filters);
      params.add("word_conv" + std::to_string(l) + "_b", {s.filters});
      in = s.filters;
    }
  } else {
    int64_t in = w_in;
    for (int l = 0; l < config.word_encoder.lstm_layers; ++l) {
      add_lstm("word_lstm" + std::to_string(l) + "_fwd", in, config.word_encoder.lstm_units);
      add_lstm("word_lstm" + std::to_string(l) + "_bwd", in, config.word_encoder.lstm_units);
      in = 2 * config.word_encoder.lstm_units;
    }
  }

  const int64_t enc = enc_dim();
  if (config.decoder == DecoderKind::kLstm) {
    const int64_t du = config.decoder_units;
    add_glorot("tag_emb", {vocab.n_tags(), du}, du, du);
    add_lstm("dec", du + enc, du);
    add_glorot("out_w", {du, t_out}, du, t_out);
    params.add("out_b", {t_out});
  } else {
    add_glorot("crf_w", {enc, t_out}, enc, t_out);
    params.add("crf_b", {t_out});
    add_glorot("crf_trans", {t_out, t_out}, t_out, t_out);
  }
}

int64_t TaggerModel::enc_dim() const {
  return config.word_out_dim() + config.char_out_dim() + config.emb_dim;
}

namespace {

Var build_conv_stack(Tape& t, Var x, int64_t time_steps,
                     const std::vector<Real>& pad_factors, TaggerModel& model,
                     const std::string& prefix, const CnnSpec& spec,
                     Mode dmode, Rng& rng) {
  Var h = x;
  for (int l = 0; l < spec.layers; ++l) {
    const int64_t in_width = t.value(h).cols();
    Var k = t.leaf(model.params.at(prefix + std::to_string(l) + "_k"));
    Var b = t.leaf(model.params.at(prefix + std::to_string(l) + "_b"));
    Var c = t.conv1d_same(h, k, b, time_steps);
    c = t.scale_rows(c, pad_factors);
    c = t.relu(c);
    if (t.value(c).cols() == in_width) c = t.add(c, h);
    if (l + 1 < spec.layers) {
      c = t.dropout(c, static_cast<Real>(model.config.dropout_p), dmode, rng);
    }
    h = c;
  }
  return h;
}

struct LstmLeaves {
  Var wx, wh, b;
  int64_t units;
};

LstmLeaves lstm_leaves(Tape& t, TaggerModel& model, const std::string& prefix) {
  Parameter& wh = model.params.at(prefix + "_wh");
  return {t.leaf(model.params.at(prefix + "_wx")), t.leaf(wh),
          t.leaf(model.params.at(prefix + "_b")), wh.value.dim(0)};
}

// Runs one direction over an (N*time_steps) x C grid; reversed directions
// read input position len-1-s at step s. Returns the per-step h outputs.
std::vector<Var> run_lstm_direction(Tape& t, Var x, int64_t time_steps,
                                    const std::vector<int32_t>& lens,
                                    const LstmLeaves& w, bool reversed) {
  const int64_t nseq = t.value(x).rows() / time_steps;
  Var h = t.input(Tensor::zeros({nseq, w.units}));
  Var c = t.input(Tensor::zeros({nseq, w.units}));
  std::vector<Var> outs;
  outs.reserve(static_cast<size_t>(time_steps));
  for (int64_t s = 0; s < time_steps; ++s) {
    std::vector<int32_t> rows(static_cast<size_t>(nseq));
    for (int64_t n = 0; n < nseq; ++n) {
      int64_t pos = s;
      if (reversed) {
        pos = std::max<int64_t>(static_cast<int64_t>(lens[static_cast<size_t>(n)]) - 1 - s,
                                0);
      }
      rows[static_cast<size_t>(n)] = static_cast<int32_t>(n * time_steps + pos);
    }
    Var xs = t.select_rows(x, std::move(rows));
    LstmStepOut step = lstm_step(t, xs, h, c, w.wx, w.wh, w.b);
    h = step.h;
    c = step.c;
    outs.push_back(h);
  }
  return outs;
}

// Sums per-step outputs masked to each sequence's final step, which picks the
// state right after the last real input.
Var final_state(Tape& t, const std::vector<Var>& steps,
                const std::vector<int32_t>& lens) {
  const int64_t nseq = static_cast<int64_t>(lens.size());
  Var acc = t.input(Tensor::zeros(t.value(steps[0]).shape));
  for (int64_t s = 0; s < static_cast<int64_t>(steps.size()); ++s) {
    std::vector<Real> pick(static_cast<size_t>(nseq), Real(0));
    bool any = false;
    for (int64_t n = 0; n < nseq; ++n) {
      if (static_cast<int64_t>(lens[static_cast<size_t>(n)]) - 1 == s) {
        pick[static_cast<size_t>(n)] = Real(1);
        any = true;
      }
    }
    if (!any) continue;
    acc = t.add(acc, t.scale_rows(steps[static_cast<size_t>(s)], std::move(pick)));
  }
  return acc;
}

// Bidirectional LSTM final states: [N x 2U].
Var build_bilstm_final(Tape& t, Var x, int64_t time_steps,
                       const std::vector<int32_t>& lens, TaggerModel& model,
                       const std::string& prefix) {
  LstmLeaves fwd = lstm_leaves(t, model, prefix + "_fwd");
  LstmLeaves bwd = lstm_leaves(t, model, prefix + "_bwd");
  auto fo = run_lstm_direction(t, x, time_steps, lens, fwd, false);
  auto bo = run_lstm_direction(t, x, time_steps, lens, bwd, true);
  return t.concat_cols(final_state(t, fo, lens), final_state(t, bo, lens));
}

// Bidirectional LSTM per-position outputs as an (N*time_steps) x 2U grid.
Var build_bilstm_grid(Tape& t, Var x, int64_t time_steps,
                      const std::vector<int32_t>& lens, TaggerModel& model,
                      const std::string& prefix) {
  LstmLeaves fwd = lstm_leaves(t, model, prefix + "_fwd");
  LstmLeaves bwd = lstm_leaves(t, model, prefix + "_bwd");
  const int64_t nseq = static_cast<int64_t>(lens.size());
  Var fgrid = t.stack_steps(run_lstm_direction(t, x, time_steps, lens, fwd, false));
  Var bsteps = t.stack_steps(run_lstm_direction(t, x, time_steps, lens, bwd, true));
  // Step s of the reversed direction holds position len-1-s; put it back.
  std::vector<int32_t> order(static_cast<size_t>(nseq * time_steps));
  for (int64_t n = 0; n < nseq; ++n) {
    const int64_t len = lens[static_cast<size_t>(n)];
    for (int64_t p = 0; p < time_steps; ++p) {
      const int64_t src = p < len ? len - 1 - p : p;
      order[static_cast<size_t>(n * time_steps + p)] =
          static_cast<int32_t>(n * time_steps + src);
    }
  }
  Var bgrid = t.select_rows(bsteps, std::move(order));
  return t.concat_cols(fgrid, bgrid);
}

struct EncoderVars {
  Var w_char, w_full, h_top, h_enc;
};

EncoderVars build_encoder(Tape& t, const FormattedBatch& fb, TaggerModel& model,
                          RunMode mode, Rng& rng) {
  const TaggerConfig& cfg = model.config;
  const int64_t B = fb.batch, L = fb.padded_len, W = fb.padded_word_len;
  const int64_t nw = B * L;
  const Mode dmode = mode == RunMode::kEval ? Mode::kEval : Mode::kTrain;

  Var ctable = t.leaf(model.params.at("char_emb"));
  Var cx = t.select_rows(ctable, fb.char_ids);
  std::vector<Real> char_pad(static_cast<size_t>(nw * W), Real(0));
  std::vector<int32_t> char_lens(static_cast<size_t>(nw));
  for (int64_t wi = 0; wi < nw; ++wi) {
    const int32_t len = fb.char_len[static_cast<size_t>(wi)];
    char_lens[static_cast<size_t>(wi)] = std::max<int32_t>(len, 1);
    for (int32_t p = 0; p < len; ++p) char_pad[static_cast<size_t>(wi * W + p)] = Real(1);
  }
  cx = t.scale_rows(cx, char_pad);

  Var w_char;
  if (cfg.char_encoder.kind == EncoderKind::kCnn) {
    Var h = build_conv_stack(t, cx, W, char_pad, model, "char_conv",
                             cfg.char_encoder.cnn, dmode, rng);
    w_char = t.max_pool_time(h, W, char_lens);
  } else {
    w_char = build_bilstm_final(t, cx, W, char_lens, model, "char_lstm");
  }

  std::vector<int32_t> ids = fb.word_ids;
  if (mode == RunMode::kTrain && cfg.word_drop_p > 0) {
    for (size_t i = 0; i < ids.size(); ++i) {
      if (fb.loss_mask[i] && rng.bernoulli(cfg.word_drop_p)) {
        ids[i] = Vocabulary::kUnkWord;
      }
    }
  }
  Var wtable = t.leaf(model.params.at("word_emb"));
  Var wemb = t.select_rows(wtable, ids);
  Var w_full = t.concat_cols(w_char, wemb);
  std::vector<Real> word_pad(static_cast<size_t>(nw), Real(0));
  for (int64_t i = 0; i < nw; ++i) {
    if (fb.word_ids[static_cast<size_t>(i)] != Vocabulary::kPadWord) {
      word_pad[static_cast<size_t>(i)] = Real(1);
    }
  }
  w_full = t.scale_rows(w_full, word_pad);

  Var h_top;
  if (cfg.word_encoder.kind == EncoderKind::kCnn) {
    h_top = build_conv_stack(t, w_full, L, word_pad, model, "word_conv",
                             cfg.word_encoder.cnn, dmode, rng);
  } else {
    std::vector<int32_t> framed(static_cast<size_t>(B));
    for (int64_t b = 0; b < B; ++b) {
      framed[static_cast<size_t>(b)] = fb.length[static_cast<size_t>(b)] + 2;
    }
    Var in = w_full;
    for (int l = 0; l < cfg.word_encoder.lstm_layers; ++l) {
      Var g = build_bilstm_grid(t, in, L, framed, model,
                                "word_lstm" + std::to_string(l));
      g = t.scale_rows(g, word_pad);
      if (l + 1 < cfg.word_encoder.lstm_layers) {
        g = t.dropout(g, static_cast<Real>(cfg.dropout_p), dmode, rng);
      }
      in = g;
    }
    h_top = in;
  }
  Var h_enc = t.concat_cols(h_top, w_full);
  return {w_char, w_full, h_top, h_enc};
}

}  // namespace

EncoderOutput encode(const FormattedBatch& fb, TaggerModel& model, RunMode mode,
                     Rng& rng) {
  EncoderOutput out;
  EncoderVars ev = build_encoder(out.tape, fb, model, mode, rng);
  out.w_char = ev.w_char;
  out.w_full = ev.w_full;
  out.h_top = ev.h_top;
  out.h_enc = ev.h_enc;
  out.fb = fb;
  return out;
}

Tensor encode_chars(const FormattedBatch& fb, TaggerModel& model, RunMode mode,
                    Rng& rng) {
  Tape t;
  return t.value(build_encoder(t, fb, model, mode, rng).w_char);
}

Tensor word_features(const FormattedBatch& fb, TaggerModel& model, RunMode mode,
                     Rng& rng) {
  Tape t;
  return t.value(build_encoder(t, fb, model, mode, rng).w_full);
}

namespace {

struct DecoderWeights {
  const Tensor* tag_emb;
  const Tensor* wx;
  const Tensor* wh;
  const Tensor* b;
  const Tensor* out_w;
  const Tensor* out_b;
  int64_t units = 0, t_out = 0, enc = 0, x_dim = 0;
};

DecoderWeights decoder_weights(const TaggerModel& m) {
  if (m.config.decoder != DecoderKind::kLstm) {
    throw ContractError("decoder op needs an LSTM-decoder model");
  }
  DecoderWeights w;
  w.tag_emb = &m.params.at("tag_emb").value;
  w.wx = &m.params.at("dec_wx").value;
  w.wh = &m.params.at("dec_wh").value;
  w.b = &m.params.at("dec_b").value;
  w.out_w = &m.params.at("out_w").value;
  w.out_b = &m.params.at("out_b").value;
  w.units = m.config.decoder_units;
  w.t_out = m.n_output_tags();
  w.enc = m.enc_dim();
  w.x_dim = w.units + w.enc;
  return w;
}

// Advances (h, c) by one decoder step and fills lp with the next-tag log
// probabilities.
void decoder_step(const DecoderWeights& w, int32_t prev_tag, const Real* enc_row,
                  std::vector<Real>& h, std::vector<Real>& c,
                  std::vector<double>& lp) {
  const int64_t u = w.units;
  std::vector<Real> x(static_cast<size_t>(w.x_dim));
  const Real* te = w.tag_emb->data() + prev_tag * u;
  std::copy(te, te + u, x.data());
  std::copy(enc_row, enc_row + w.enc, x.data() + u);

  std::vector<Real> gates(w.b->v.begin(), w.b->v.end());
  nnmath::gemm_nn_accum(gates.data(), x.data(), w.wx->data(), 1, w.x_dim, 4 * u);
  nnmath::gemm_nn_accum(gates.data(), h.data(), w.wh->data(), 1, u, 4 * u);
  nnmath::lstm_activate(gates.data(), c.data(), h.data(), c.data(), u);

  std::vector<Real> logits(w.out_b->v.begin(), w.out_b->v.end());
  nnmath::gemm_nn_accum(logits.data(), h.data(), w.out_w->data(), 1, u, w.t_out);
  lp.resize(static_cast<size_t>(w.t_out));
  nnmath::log_softmax(logits.data(), w.t_out, lp.data());
}

void check_row(const EncoderOutput& enc, int64_t row) {
  if (row < 0 || row >= enc.fb.batch) {
    throw ContractError("decode: row " + std::to_string(row) + " outside batch of " +
                        std::to_string(enc.fb.batch));
  }
}

}  // namespace

Decoding decode_greedy(const EncoderOutput& enc, const TaggerModel& model,
                       int64_t row) {
  check_row(enc, row);
  const DecoderWeights w = decoder_weights(model);
  const Tensor& henc = enc.tape.value(enc.h_enc);
  const int64_t L = enc.fb.padded_len;
  const int64_t k = enc.fb.length[static_cast<size_t>(row)];

  Decoding d;
  std::vector<Real> h(static_cast<size_t>(w.units), Real(0));
  std::vector<Real> c(static_cast<size_t>(w.units), Real(0));
  std::vector<double> lp;
  int32_t prev = static_cast<int32_t>(model.vocab.go_tag_id());
  for (int64_t i = 1; i <= k; ++i) {
    decoder_step(w, prev, henc.data() + (row * L + i) * henc.cols(), h, c, lp);
    int32_t best = 0;
    for (int64_t j = 1; j < w.t_out; ++j) {
      if (lp[static_cast<size_t>(j)] > lp[static_cast<size_t>(best)]) {
        best = static_cast<int32_t>(j);
      }
    }
    d.tags.push_back(best);
    d.step_log_probs.push_back(lp[static_cast<size_t>(best)]);
    d.log_prob += lp[static_cast<size_t>(best)];
    prev = best;
  }
  return d;
}

Decoding decode_beam(const EncoderOutput& enc, const TaggerModel& model,
                     int64_t beam_width, int64_t row) {
  if (beam_width < 1) throw ParamError("decode_beam: beam_width must be >= 1");
  check_row(enc, row);
  const DecoderWeights w = decoder_weights(model);
  const Tensor& henc = enc.tape.value(enc.h_enc);
  const int64_t L = enc.fb.padded_len;
  const int64_t k = enc.fb.length[static_cast<size_t>(row)];

  struct Beam {
    std::vector<int32_t> tags;
    std::vector<double> steps;
    double lp = 0;
    std::vector<Real> h, c;
  };
  std::vector<Beam> beams(1);
  beams[0].h.assign(static_cast<size_t>(w.units), Real(0));
  beams[0].c.assign(static_cast<size_t>(w.units), Real(0));

  const int32_t go = static_cast<int32_t>(model.vocab.go_tag_id());
  std::vector<double> lp;
  for (int64_t i = 1; i <= k; ++i) {
    std::vector<Beam> next;
    next.reserve(beams.size() * static_cast<size_t>(w.t_out));
    for (Beam& b : beams) {
      const int32_t prev = b.tags.empty() ? go : b.tags.back();
      decoder_step(w, prev, henc.data() + (row * L + i) * henc.cols(), b.h, b.c, lp);
      for (int32_t j = 0; j < w.t_out; ++j) {
        Beam nb;
        nb.tags = b.tags;
        nb.tags.push_back(j);
        nb.steps = b.steps;
        nb.steps.push_back(lp[static_cast<size_t>(j)]);
        nb.lp = b.lp + lp[static_cast<size_t>(j)];
        nb.h = b.h;
        nb.c = b.c;
        next.push_back(std::move(nb));
      }
    }
    std::sort(next.begin(), next.end(), [](const Beam& a, const Beam& b) {
      if (a.lp != b.lp) return a.lp > b.lp;
      return a.tags < b.tags;
    });
    if (static_cast<int64_t>(next.size()) > beam_width) {
      next.resize(static_cast<size_t>(beam_width));
    }
    beams = std::move(next);
  }
  Decoding d;
  if (!beams.empty()) {
    d.tags = beams[0].tags;
    d.step_log_probs = beams[0].steps;
    d.log_prob = beams[0].lp;
  }
  return d;
}

double sequence_log_prob(const EncoderOutput& enc, const TaggerModel& model,
                         const std::vector<int32_t>& tags, int64_t row) {
  check_row(enc, row);
  const DecoderWeights w = decoder_weights(model);
  const int64_t k = enc.fb.length[static_cast<size_t>(row)];
  if (static_cast<int64_t>(tags.size()) != k) {
    throw ContractError("sequence_log_prob: expected " + std::to_string(k) + " tags");
  }
  const Tensor& henc = enc.tape.value(enc.h_enc);
  const int64_t L = enc.fb.padded_len;
  std::vector<Real> h(static_cast<size_t>(w.units), Real(0));
  std::vector<Real> c(static_cast<size_t>(w.units), Real(0));
  std::vector<double> lp;
  double total = 0;
  int32_t prev = static_cast<int32_t>(model.vocab.go_tag_id());
  for (int64_t i = 1; i <= k; ++i) {
    const int32_t y = tags[static_cast<size_t>(i - 1)];
    if (y < 0 || y >= w.t_out) throw ContractError("sequence_log_prob: bad tag id");
    decoder_step(w, prev, henc.data() + (row * L + i) * henc.cols(), h, c, lp);
    total += lp[static_cast<size_t>(y)];
    prev = y;
  }
  return total;
}

namespace {

struct CrfWeights {
  const Tensor* w;
  const Tensor* b;
  const Tensor* trans;
  int64_t t_out = 0, enc = 0;
};

CrfWeights crf_weights(const TaggerModel& m) {
  if (m.config.decoder != DecoderKind::kCrf) {
    throw ContractError("crf op needs a CRF-decoder model");
  }
  CrfWeights w;
  w.w = &m.params.at("crf_w").value;
  w.b = &m.params.at("crf_b").value;
  w.trans = &m.params.at("crf_trans").value;
  w.t_out = m.n_output_tags();
  w.enc = m.enc_dim();
  return w;
}

// Unary scores for the k real positions of a row: [k x t_out].
std::vector<Real> crf_unary(const EncoderOutput& enc, const CrfWeights& w,
                            int64_t row) {
  const Tensor& henc = enc.tape.value(enc.h_enc);
  const int64_t L = enc.fb.padded_len;
  const int64_t k = enc.fb.length[static_cast<size_t>(row)];
  std::vector<Real> u(static_cast<size_t>(k * w.t_out));
  for (int64_t i = 0; i < k; ++i) {
    std::copy(w.b->v.begin(), w.b->v.end(), u.begin() + i * w.t_out);
  }
  nnmath::gemm_nn_accum(u.data(), henc.data() + (row * L + 1) * henc.cols(),
                        w.w->data(), k, w.enc, w.t_out);
  return u;
}

}  // namespace

double crf_log_partition(const EncoderOutput& enc, const TaggerModel& model,
                         int64_t row) {
  check_row(enc, row);
  const CrfWeights w = crf_weights(model);
  const int64_t k = enc.fb.length[static_cast<size_t>(row)];
  if (k == 0) throw ContractError("crf_log_partition: empty sentence");
  return crf::log_partition(crf_unary(enc, w, row).data(), w.trans->data(), k,
                            w.t_out);
}

double crf_path_score(const EncoderOutput& enc, const TaggerModel& model,
                      const std::vector<int32_t>& tags, int64_t row) {
  check_row(enc, row);
  const CrfWeights w = crf_weights(model);
  const int64_t k = enc.fb.length[static_cast<size_t>(row)];
  if (static_cast<int64_t>(tags.size()) != k) {
    throw ContractError("crf_path_score: expected " + std::to_string(k) + " tags");
  }
  return crf::path_score(crf_unary(enc, w, row).data(), w.trans->data(),
                         tags.data(), k, w.t_out);
}

Decoding crf_viterbi(const EncoderOutput& enc, const TaggerModel& model,
                     int64_t row) {
  check_row(enc, row);
  const CrfWeights w = crf_weights(model);
  const int64_t k = enc.fb.length[static_cast<size_t>(row)];
  if (k == 0) throw ContractError("crf_viterbi: empty sentence");
  const int64_t t = w.t_out;
  const std::vector<Real> u = crf_unary(enc, w, row);
  const Real* a = w.trans->data();

  Decoding d;
  d.tags = crf::viterbi(u.data(), a, k, t).tags;

  // Chain-rule conditionals: log P(y_i | y_<i) from suffix sums, so the steps
  // telescope to the path's normalized log probability.
  const std::vector<double> beta = crf::beta_table(u.data(), a, k, t);
  const double logz = crf::log_partition(u.data(), a, k, t);
  double prefix_score = 0;
  double prev_prefix_lp = 0;
  for (int64_t i = 0; i < k; ++i) {
    const int32_t y = d.tags[static_cast<size_t>(i)];
    prefix_score += static_cast<double>(u[static_cast<size_t>(i * t + y)]);
    if (i > 0) {
      prefix_score += static_cast<double>(a[d.tags[static_cast<size_t>(i - 1)] * t + y]);
    }
    const double prefix_lp = prefix_score + beta[static_cast<size_t>(i * t + y)] - logz;
    d.step_log_probs.push_back(prefix_lp - prev_prefix_lp);
    prev_prefix_lp = prefix_lp;
  }
  d.log_prob = prev_prefix_lp;
  return d;
}

Decoding decode(const EncoderOutput& enc, const TaggerModel& model, int64_t row) {
  return model.config.decoder == DecoderKind::kLstm ? decode_greedy(enc, model, row)
                                                    : crf_viterbi(enc, model, row);
}

LossBuild build_sequence_nll(Tape& t, const FormattedBatch& fb, TaggerModel& model,
                             RunMode mode, Rng& rng) {
  EncoderVars ev = build_encoder(t, fb, model, mode, rng);
  const int64_t B = fb.batch, L = fb.padded_len;
  const int64_t words = fb.mask_total();
  if (words == 0) throw ContractError("build_sequence_nll: batch has no real words");
  Var total = t.input(Tensor::scalar(0));

  if (model.config.decoder == DecoderKind::kLstm) {
    const int64_t du = model.config.decoder_units;
    Var tag_table = t.leaf(model.params.at("tag_emb"));
    Var wx = t.leaf(model.params.at("dec_wx"));
    Var wh = t.leaf(model.params.at("dec_wh"));
    Var db = t.leaf(model.params.at("dec_b"));
    Var ow = t.leaf(model.params.at("out_w"));
    Var ob = t.leaf(model.params.at("out_b"));
    Var h = t.input(Tensor::zeros({B, du}));
    Var c = t.input(Tensor::zeros({B, du}));

    int64_t max_k = 0;
    for (int32_t l : fb.length) max_k = std::max<int64_t>(max_k, l);
    const int32_t go = static_cast<int32_t>(model.vocab.go_tag_id());

    for (int64_t p = 1; p <= max_k; ++p) {
      std::vector<int32_t> prev(static_cast<size_t>(B));
      std::vector<int32_t> rows(static_cast<size_t>(B));
      std::vector<int32_t> gold(static_cast<size_t>(B));
      std::vector<uint8_t> msk(static_cast<size_t>(B));
      for (int64_t b = 0; b < B; ++b) {
        prev[static_cast<size_t>(b)] =
            p == 1 ? go : fb.tag_ids[static_cast<size_t>(b * L + p - 1)];
        rows[static_cast<size_t>(b)] = static_cast<int32_t>(b * L + p);
        gold[static_cast<size_t>(b)] = fb.tag_ids[static_cast<size_t>(b * L + p)];
        msk[static_cast<size_t>(b)] = fb.loss_mask[static_cast<size_t>(b * L + p)];
      }
      Var x = t.concat_cols(t.select_rows(tag_table, std::move(prev)),
                            t.select_rows(ev.h_enc, std::move(rows)));
      LstmStepOut step = lstm_step(t, x, h, c, wx, wh, db);
      h = step.h;
      c = step.c;
      Var logits = t.affine(h, ow, ob);
      total = t.add(total, t.nll_rows(logits, std::move(gold), std::move(msk)));
    }
  } else {
    Var cw = t.leaf(model.params.at("crf_w"));
    Var cb = t.leaf(model.params.at("crf_b"));
    Var trans = t.leaf(model.params.at("crf_trans"));
    Var unary = t.affine(ev.h_enc, cw, cb);
    for (int64_t b = 0; b < B; ++b) {
      const int64_t k = fb.length[static_cast<size_t>(b)];
      if (k == 0) continue;
      std::vector<int32_t> rows(static_cast<size_t>(k));
      std::vector<int32_t> gold(static_cast<size_t>(k));
      for (int64_t i = 0; i < k; ++i) {
        rows[static_cast<size_t>(i)] = static_cast<int32_t>(b * L + 1 + i);
        gold[static_cast<size_t>(i)] = fb.tag_ids[static_cast<size_t>(b * L + 1 + i)];
      }
      Var ub = t.select_rows(unary, std::move(rows));
      Var logz = t.crf_log_partition(ub, trans);
      Var score = t.crf_gold_score(ub, trans, std::move(gold));
      total = t.add(total, t.add(logz, t.scale(score, Real(-1))));
    }
  }
  return {t.scale(total, Real(1) / static_cast<Real>(words)), words};
}

double sequence_nll(const FormattedBatch& fb, TaggerModel& model, RunMode mode,
                    Rng& rng) {
  Tape t;
  return static_cast<double>(t.value(build_sequence_nll(t, fb, model, mode, rng).loss).v[0]);
}

TrainStats train_epoch(TaggerModel& model,
                       const std::vector<const Sentence*>& sentences,
                       const TrainOptions& opts, Rng& rng) {
  if (opts.lr <= 0) throw ParamError("train_epoch: lr must be positive");
  if (opts.clip_norm <= 0) throw ParamError("train_epoch: clip_norm must be positive");
  TrainStats stats;
  auto batches = make_batches(sentences, opts.batch_size, &rng);
  double total = 0;
  for (const auto& batch : batches) {
    FormattedBatch fb = format_batch(batch, model.vocab);
    Tape t;
    LossBuild lb = build_sequence_nll(t, fb, model, RunMode::kTrain, rng);
    model.params.zero_grads();
    t.backward(lb.loss);
    clip_global_grad_norm(model.params, opts.clip_norm);
    sgd_update(model.params, static_cast<Real>(opts.lr));
    total += static_cast<double>(t.value(lb.loss).v[0]) * static_cast<double>(lb.words);
    stats.words += lb.words;
    ++stats.batches;
  }
  stats.mean_loss = stats.words > 0 ? total / static_cast<double>(stats.words) : 0;
  return stats;
}

namespace {

std::string encoder_line(const CharEncoderConfig& c) {
  std::ostringstream os;
  if (c.kind == EncoderKind::kCnn) {
    os << "cnn " << c.cnn.layers << " " << c.cnn.filters << " " << c.cnn.width;
  } else {
    os << "lstm " << c.lstm_units;
  }
  return os.str();
}

std::string encoder_line(const WordEncoderConfig& c) {
  std::ostringstream os;
  if (c.kind == EncoderKind::kCnn) {
    os << "cnn " << c.cnn.layers << " " << c.cnn.filters << " " << c.cnn.width;
  } else {
    os << "lstm " << c.lstm_layers << " " << c.lstm_units;
  }
  return os.str();
}

[[noreturn]] void bad_model(const std::string& what) {
  throw ParseError("model file: " + what);
}

std::string need_line(std::istream& in, const std::string& what) {
  std::string line;
  if (!std::getline(in, line)) bad_model("missing " + what);
  return line;
}

int64_t parse_int(const std::string& s, const std::string& what) {
  std::istringstream os(s);
  int64_t x = 0;
  if (!(os >> x)) bad_model("bad " + what);
  return x;
}

double parse_real(const std::string& s, const std::string& what) {
  std::istringstream os(s);
  double x = 0;
  if (!(os >> x)) bad_model("bad " + what);
  return x;
}

}  // namespace

void save_model(const TaggerModel& model, std::ostream& out) {
  const TaggerConfig& c = model.config;
  out << "seqal-model 1\n";
  out << "char_encoder " << encoder_line(c.char_encoder) << "\n";
  out << "word_encoder " << encoder_line(c.word_encoder) << "\n";
  out << "decoder " << (c.decoder == DecoderKind::kLstm ? "lstm" : "crf") << " "
      << c.decoder_units << "\n";
  out << "char_emb_dim " << c.char_emb_dim << "\n";
  out << "emb_dim " << c.emb_dim << "\n";
  out << "dropout_p " << c.dropout_p << "\n";
  out << "word_drop_p " << c.word_drop_p << "\n";
  const Vocabulary& v = model.vocab;
  out << "words " << (v.id_to_word.size() - 4) << "\n";
  for (size_t i = 4; i < v.id_to_word.size(); ++i) out << v.id_to_word[i] << "\n";
  out << "chars " << v.char_id_to_byte.size() << "\n";
  for (uint8_t b : v.char_id_to_byte) out << static_cast<int>(b) << "\n";
  out << "tags " << v.id_to_tag.size() << "\n";
  for (const std::string& t : v.id_to_tag) out << t << "\n";
  out << "params\n";
  write_checkpoint(out, model.params);
}

TaggerModel load_model(std::istream& in) {
  if (need_line(in, "header") != "seqal-model 1") bad_model("bad header");
  TaggerConfig cfg;
  Vocabulary vocab;

  auto split_kv = [&](const std::string& line, const std::string& key) {
    if (line.rfind(key + " ", 0) != 0) bad_model("expected " + key);
    return line.substr(key.size() + 1);
  };

  {
    std::istringstream os(split_kv(need_line(in, "char_encoder"), "char_encoder"));
    std::string kind;
    os >> kind;
    if (kind == "cnn") {
      cfg.char_encoder.kind = EncoderKind::kCnn;
      os >> cfg.char_encoder.cnn.layers >> cfg.char_encoder.cnn.filters >>
          cfg.char_encoder.cnn.width;
    } else if (kind == "lstm") {
      cfg.char_encoder.kind = EncoderKind::kLstm;
      os >> cfg.char_encoder.lstm_units;
    } else {
      bad_model("unknown char encoder " + kind);
    }
    if (!os) bad_model("char encoder fields");
  }
  {
    std::istringstream os(split_kv(need_line(in, "word_encoder"), "word_encoder"));
    std::string kind;
    os >> kind;
    if (kind == "cnn") {
      cfg.word_encoder.kind = EncoderKind::kCnn;
      os >> cfg.word_encoder.cnn.layers >> cfg.word_encoder.cnn.filters >>
          cfg.word_encoder.cnn.width;
    } else if (kind == "lstm") {
      cfg.word_encoder.kind = EncoderKind::kLstm;
      os >> cfg.word_encoder.lstm_layers >> cfg.word_encoder.lstm_units;
    } else {
      bad_model("unknown word encoder " + kind);
    }
    if (!os) bad_model("word encoder fields");
  }
  {
    std::istringstream os(split_kv(need_line(in, "decoder"), "decoder"));
    std::string kind;
    os >> kind >> cfg.decoder_units;
    if (!os) bad_model("decoder fields");
    if (kind == "lstm") {
      cfg.decoder = DecoderKind::kLstm;
    } else if (kind == "crf") {
      cfg.decoder = DecoderKind::kCrf;
    } else {
      bad_model("unknown decoder " + kind);
    }
  }
  cfg.char_emb_dim = static_cast<int>(
      parse_int(split_kv(need_line(in, "char_emb_dim"), "char_emb_dim"), "char_emb_dim"));
  cfg.emb_dim =
      static_cast<int>(parse_int(split_kv(need_line(in, "emb_dim"), "emb_dim"), "emb_dim"));
  cfg.dropout_p = parse_real(split_kv(need_line(in, "dropout_p"), "dropout_p"), "dropout_p");
  cfg.word_drop_p =
      parse_real(split_kv(need_line(in, "word_drop_p"), "word_drop_p"), "word_drop_p");

  vocab.id_to_word = {"[PAD]", "[UNK]", "[BOS]", "[EOS]"};
  const int64_t n_words = parse_int(split_kv(need_line(in, "words"), "words"), "word count");
  for (int64_t i = 0; i < n_words; ++i) vocab.id_to_word.push_back(need_line(in, "word"));
  for (size_t i = 0; i < vocab.id_to_word.size(); ++i) {
    vocab.word_to_id[vocab.id_to_word[i]] = static_cast<int32_t>(i);
  }
  vocab.byte_to_char_id.assign(256, -1);
  const int64_t n_chars = parse_int(split_kv(need_line(in, "chars"), "chars"), "char count");
  for (int64_t i = 0; i < n_chars; ++i) {
    const int64_t b = parse_int(need_line(in, "char byte"), "char byte");
    if (b < 0 || b > 255) bad_model("char byte out of range");
    vocab.byte_to_char_id[static_cast<size_t>(b)] =
        static_cast<int32_t>(4 + vocab.char_id_to_byte.size());
    vocab.char_id_to_byte.push_back(static_cast<uint8_t>(b));
  }
  const int64_t n_tags = parse_int(split_kv(need_line(in, "tags"), "tags"), "tag count");
  for (int64_t i = 0; i < n_tags; ++i) vocab.id_to_tag.push_back(need_line(in, "tag"));
  if (vocab.id_to_tag.empty() || vocab.id_to_tag.back() != "[GO]") {
    bad_model("tag list must end with [GO]");
  }
  for (size_t i = 0; i < vocab.id_to_tag.size(); ++i) {
    vocab.tag_to_id[vocab.id_to_tag[i]] = static_cast<int32_t>(i);
  }
  if (need_line(in, "params marker") != "params") bad_model("expected params marker");

  Rng init_rng(0);
  TaggerModel model(cfg, std::move(vocab), init_rng);
  read_checkpoint(in, model.params);
  return model;
}

void save_model_file(const TaggerModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  save_model(model, out);
}

TaggerModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path);
  return load_model(in);
}

}  // namespace seqal
