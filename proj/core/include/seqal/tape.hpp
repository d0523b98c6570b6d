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

#include "seqal/params.hpp"
#include "seqal/rng.hpp"
#include "seqal/tensor.hpp"

namespace seqal {

// Whether stochastic layers (dropout, word-drop) are active.
enum class Mode { kTrain, kEval };

// Handle to a node recorded on a Tape.
struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense tensors.
//
// Recording an op runs its forward computation immediately and stores enough
// state (indices, dropout masks, gate activations) to replay the forward pass
// bit-identically and to run one backward pass. Tensors are treated as
// row-major grids; sequence geometry is passed explicitly where an op needs
// it, so a batch of N sequences of T steps is just an (N*T) x C grid.
class Tape {
 public:
  // When set, every recorded op checks its output for NaN/Inf (slow).
  static bool debug_check_finite;

  // Parameter input. Backward accumulates into p.grad.
  Var leaf(Parameter& p);
  // Non-parameter input; receives no gradient.
  Var input(Tensor t);

  // out[m, :] = x[rows[m], :]
  Var select_rows(Var x, std::vector<int32_t> rows);
  // SAME-padded 1d cross-correlation along time. x is an (N*time_steps) x Ci
  // grid, kernels is [width, Ci, Co] with odd width, bias is [Co]. Windows
  // reaching outside a sequence read zeros.
  Var conv1d_same(Var x, Var kernels, Var bias, int64_t time_steps);
  Var relu(Var x);
  Var sigmoid(Var x);
  Var tanh(Var x);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var x, Real c);
  // out[r, :] = x[r, :] * row_factors[r]
  Var scale_rows(Var x, std::vector<Real> row_factors);
  Var concat_cols(Var a, Var b);
  Var slice_cols(Var x, int64_t first, int64_t count);
  // steps[t] is [B x C]; out[(b * steps.size()) + t, :] = steps[t][b, :]
  Var stack_steps(const std::vector<Var>& steps);
  // Per-sequence max over time with first-index tie break. x is an
  // (N*time_steps) x C grid; out is N x C. When lengths is non-empty it gives
  // the valid prefix of each sequence (1 <= lengths[n] <= time_steps).
  Var max_pool_time(Var x, int64_t time_steps,
                    std::vector<int32_t> lengths = {});
  // Inverted dropout: keep with probability 1-p and scale kept values by
  // 1/(1-p). Identity (returns x itself) in eval mode or when p == 0.
  Var dropout(Var x, Real p, Mode mode, Rng& rng);
  // out = x * w + b with w [X x O], b [O].
  Var affine(Var x, Var w, Var b);
  // Fused LSTM cell over a batch of rows. x [B x X], h_prev/c_prev [B x H],
  // wx [X x 4H], wh [H x 4H], b [4H]; gate order along the 4H axis is
  // input, forget, cell, output. Returns [B x 2H] laid out [h | c] per row.
  Var lstm_cell(Var x, Var h_prev, Var c_prev, Var wx, Var wh, Var b);
  // Sum over rows with mask[r] != 0 of -log softmax(logits[r])[gold[r]].
  Var nll_rows(Var logits, std::vector<int32_t> gold,
               std::vector<uint8_t> mask);
  // Log partition of a linear-chain CRF: unary [n x T], trans [T x T].
  Var crf_log_partition(Var unary, Var trans);
  // Path score sum(unary[i, g_i]) + sum(trans[g_{i-1}, g_i]).
  Var crf_gold_score(Var unary, Var trans, std::vector<int32_t> gold);
  Var sum_all(Var x);

  const Tensor& value(Var v) const;
  // Direct access to a recorded value; used by finite-difference checking to
  // perturb leaf values between replays.
  Tensor& mutable_value(Var v);
  // Gradient w.r.t. a recorded node (zeros when backward never reached it).
  const Tensor& grad(Var v);

  // Reverse-mode accumulation from a recorded scalar. Parameter gradients are
  // added into Parameter::grad. One backward pass per tape.
  void backward(Var loss);
  // Re-executes every recorded forward computation in order, reusing stored
  // randomness, so recorded outputs are reproduced bit-identically.
  void replay_forward();

  size_t size() const { return nodes_.size(); }
  // Parameter leaves in record order.
  const std::vector<std::pair<Parameter*, Var>>& leaves() const {
    return leaves_;
  }

 private:
  enum class Op : uint8_t {
    kLeaf,
    kInput,
    kSelectRows,
    kConv1d,
    kRelu,
    kSigmoid,
    kTanh,
    kAdd,
    kMul,
    kScale,
    kScaleRows,
    kConcatCols,
    kSliceCols,
    kStackSteps,
    kMaxPoolTime,
    kDropout,
    kAffine,
    kLstmCell,
    kNllRows,
    kCrfLogZ,
    kCrfGold,
    kSumAll,
  };

  struct Node {
    Op op;
    std::vector<int32_t> in;
    Tensor val;
    Tensor grad;
    Parameter* param = nullptr;
    std::vector<int32_t> idx;   // row indices / gold ids / argmax
    std::vector<int32_t> idx2;  // pool lengths
    std::vector<uint8_t> mask;
    std::vector<Real> aux;  // dropout mask, row factors, gates, alpha table
    Real c0 = 0;
    int64_t i0 = 0, i1 = 0;
  };

  Var push(Node n);
  Node& node(Var v);
  const Node& node(Var v) const;
  void ensure_grad(Node& n);
  void forward_eval(Node& n);
  void backward_eval(Node& n);

  std::vector<Node> nodes_;
  std::vector<std::pair<Parameter*, Var>> leaves_;
  bool backward_done_ = false;
};

struct LstmStepOut {
  Var h, c;
};

// Single LSTM step built from the fused cell plus column slices.
LstmStepOut lstm_step(Tape& t, Var x, Var h_prev, Var c_prev, Var wx, Var wh,
                      Var b);

}  // namespace seqal
