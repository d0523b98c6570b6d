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

#include "seqal/tape.hpp"

#include <algorithm>
#include <cmath>

#include "seqal/nnmath.hpp"

namespace seqal {

bool Tape::debug_check_finite = false;

namespace {

using nnmath::gemm_nn_accum;
using nnmath::gemm_nt_accum;
using nnmath::gemm_tn_accum;
using nnmath::log_sum_exp;

void add_bias_rows(Tensor& t, const Tensor& bias) {
  const int64_t rows = t.rows(), cols = t.cols();
  for (int64_t r = 0; r < rows; ++r) {
    Real* row = t.data() + r * cols;
    for (int64_t j = 0; j < cols; ++j) row[j] += bias.v[static_cast<size_t>(j)];
  }
}

void add_col_sums(Tensor& bias_grad, const Tensor& dout) {
  const int64_t rows = dout.rows(), cols = dout.cols();
  for (int64_t r = 0; r < rows; ++r) {
    const Real* row = dout.data() + r * cols;
    for (int64_t j = 0; j < cols; ++j) bias_grad.v[static_cast<size_t>(j)] += row[j];
  }
}

}  // namespace

Var Tape::push(Node n) {
  if (backward_done_) {
    throw ContractError("Tape: cannot record after backward");
  }
  forward_eval(n);
  if (debug_check_finite && !n.val.all_finite()) {
    throw Error("Tape: non-finite value produced by op");
  }
  nodes_.push_back(std::move(n));
  Var v{static_cast<int32_t>(nodes_.size() - 1)};
  if (nodes_.back().op == Op::kLeaf) {
    leaves_.emplace_back(nodes_.back().param, v);
  }
  return v;
}

Tape::Node& Tape::node(Var v) {
  if (!v.valid() || v.id >= static_cast<int32_t>(nodes_.size())) {
    throw ContractError("Tape: invalid Var handle");
  }
  return nodes_[static_cast<size_t>(v.id)];
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= static_cast<int32_t>(nodes_.size())) {
    throw ContractError("Tape: invalid Var handle");
  }
  return nodes_[static_cast<size_t>(v.id)];
}

void Tape::ensure_grad(Node& n) {
  if (n.grad.v.empty() && n.val.numel() > 0) {
    n.grad = Tensor::zeros(n.val.shape);
  }
}

const Tensor& Tape::value(Var v) const { return node(v).val; }

Tensor& Tape::mutable_value(Var v) { return node(v).val; }

const Tensor& Tape::grad(Var v) {
  Node& n = node(v);
  ensure_grad(n);
  return n.grad;
}

Var Tape::leaf(Parameter& p) {
  Node n;
  n.op = Op::kLeaf;
  n.param = &p;
  n.val = p.value;
  return push(std::move(n));
}

Var Tape::input(Tensor t) {
  Node n;
  n.op = Op::kInput;
  n.val = std::move(t);
  return push(std::move(n));
}

Var Tape::select_rows(Var x, std::vector<int32_t> rows) {
  const Tensor& xv = value(x);
  const int64_t r = xv.rows();
  for (int32_t i : rows) {
    if (i < 0 || i >= r) throw ShapeError("select_rows: row index out of range");
  }
  Node n;
  n.op = Op::kSelectRows;
  n.in = {x.id};
  n.idx = std::move(rows);
  return push(std::move(n));
}

Var Tape::conv1d_same(Var x, Var kernels, Var bias, int64_t time_steps) {
  const Tensor& xv = value(x);
  const Tensor& kv = value(kernels);
  const Tensor& bv = value(bias);
  require_shape(kv.ndim() == 3, "conv1d_same: kernels must be [width, in, out], got " +
                                    kv.shape_str());
  const int64_t w = kv.dim(0), ci = kv.dim(1), co = kv.dim(2);
  require_shape(w >= 1 && w % 2 == 1, "conv1d_same: width must be odd, got " +
                                          std::to_string(w));
  require_shape(xv.cols() == ci, "conv1d_same: input channels " +
                                     std::to_string(xv.cols()) + " vs kernel " +
                                     std::to_string(ci));
  require_shape(bv.numel() == co, "conv1d_same: bias size " + std::to_string(bv.numel()) +
                                      " vs out channels " + std::to_string(co));
  require_shape(time_steps >= 1, "conv1d_same: time_steps must be >= 1");
  require_shape(xv.rows() % time_steps == 0,
                "conv1d_same: rows " + std::to_string(xv.rows()) +
                    " not divisible by time_steps " + std::to_string(time_steps));
  Node n;
  n.op = Op::kConv1d;
  n.in = {x.id, kernels.id, bias.id};
  n.i0 = time_steps;
  return push(std::move(n));
}

Var Tape::relu(Var x) {
  Node n;
  n.op = Op::kRelu;
  n.in = {x.id};
  return push(std::move(n));
}

Var Tape::sigmoid(Var x) {
  Node n;
  n.op = Op::kSigmoid;
  n.in = {x.id};
  return push(std::move(n));
}

Var Tape::tanh(Var x) {
  Node n;
  n.op = Op::kTanh;
  n.in = {x.id};
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  require_shape(value(a).same_shape(value(b)),
                "add: shape mismatch " + value(a).shape_str() + " vs " +
                    value(b).shape_str());
  Node n;
  n.op = Op::kAdd;
  n.in = {a.id, b.id};
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  require_shape(value(a).same_shape(value(b)),
                "mul: shape mismatch " + value(a).shape_str() + " vs " +
                    value(b).shape_str());
  Node n;
  n.op = Op::kMul;
  n.in = {a.id, b.id};
  return push(std::move(n));
}

Var Tape::scale(Var x, Real c) {
  Node n;
  n.op = Op::kScale;
  n.in = {x.id};
  n.c0 = c;
  return push(std::move(n));
}

Var Tape::scale_rows(Var x, std::vector<Real> row_factors) {
  require_shape(static_cast<int64_t>(row_factors.size()) == value(x).rows(),
                "scale_rows: factor count " + std::to_string(row_factors.size()) +
                    " vs rows " + std::to_string(value(x).rows()));
  Node n;
  n.op = Op::kScaleRows;
  n.in = {x.id};
  n.aux = std::move(row_factors);
  return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
  require_shape(value(a).rows() == value(b).rows(),
                "concat_cols: row mismatch " + std::to_string(value(a).rows()) +
                    " vs " + std::to_string(value(b).rows()));
  Node n;
  n.op = Op::kConcatCols;
  n.in = {a.id, b.id};
  return push(std::move(n));
}

Var Tape::slice_cols(Var x, int64_t first, int64_t count) {
  require_shape(first >= 0 && count >= 0 && first + count <= value(x).cols(),
                "slice_cols: [" + std::to_string(first) + ", " +
                    std::to_string(first + count) + ") outside width " +
                    std::to_string(value(x).cols()));
  Node n;
  n.op = Op::kSliceCols;
  n.in = {x.id};
  n.i0 = first;
  n.i1 = count;
  return push(std::move(n));
}

Var Tape::stack_steps(const std::vector<Var>& steps) {
  if (steps.empty()) throw ShapeError("stack_steps: no inputs");
  const Tensor& first = value(steps[0]);
  Node n;
  n.op = Op::kStackSteps;
  for (Var s : steps) {
    require_shape(value(s).same_shape(first), "stack_steps: step shape mismatch");
    n.in.push_back(s.id);
  }
  return push(std::move(n));
}

Var Tape::max_pool_time(Var x, int64_t time_steps, std::vector<int32_t> lengths) {
  const Tensor& xv = value(x);
  require_shape(time_steps >= 1, "max_pool_time: empty time axis");
  require_shape(xv.rows() % time_steps == 0,
                "max_pool_time: rows " + std::to_string(xv.rows()) +
                    " not divisible by time_steps " + std::to_string(time_steps));
  const int64_t nseq = xv.rows() / time_steps;
  if (!lengths.empty()) {
    require_shape(static_cast<int64_t>(lengths.size()) == nseq,
                  "max_pool_time: lengths size mismatch");
    for (int32_t l : lengths) {
      require_shape(l >= 1 && l <= time_steps,
                    "max_pool_time: length outside [1, time_steps]");
    }
  }
  Node n;
  n.op = Op::kMaxPoolTime;
  n.in = {x.id};
  n.i0 = time_steps;
  n.idx2 = std::move(lengths);
  return push(std::move(n));
}

Var Tape::dropout(Var x, Real p, Mode mode, Rng& rng) {
  if (p < Real(0) || p >= Real(1)) {
    throw ParamError("dropout: p must be in [0, 1)");
  }
  if (mode == Mode::kEval || p == Real(0)) return x;
  Node n;
  n.op = Op::kDropout;
  n.in = {x.id};
  n.c0 = p;
  const Real keep_scale = Real(1) / (Real(1) - p);
  n.aux.resize(value(x).v.size());
  for (Real& m : n.aux) m = rng.bernoulli(p) ? Real(0) : keep_scale;
  return push(std::move(n));
}

Var Tape::affine(Var x, Var w, Var b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  require_shape(wv.ndim() == 2, "affine: weight must be 2-d, got " + wv.shape_str());
  require_shape(xv.cols() == wv.dim(0), "affine: input width " +
                                            std::to_string(xv.cols()) + " vs weight rows " +
                                            std::to_string(wv.dim(0)));
  require_shape(bv.numel() == wv.dim(1), "affine: bias size " +
                                             std::to_string(bv.numel()) + " vs weight cols " +
                                             std::to_string(wv.dim(1)));
  Node n;
  n.op = Op::kAffine;
  n.in = {x.id, w.id, b.id};
  return push(std::move(n));
}

Var Tape::lstm_cell(Var x, Var h_prev, Var c_prev, Var wx, Var wh, Var b) {
  const Tensor& xv = value(x);
  const Tensor& hv = value(h_prev);
  const Tensor& cv = value(c_prev);
  const Tensor& wxv = value(wx);
  const Tensor& whv = value(wh);
  const Tensor& bv = value(b);
  const int64_t batch = xv.rows();
  const int64_t hid = hv.cols();
  require_shape(hv.rows() == batch && cv.rows() == batch,
                "lstm_cell: state batch mismatch");
  require_shape(cv.cols() == hid, "lstm_cell: c width " + std::to_string(cv.cols()) +
                                      " vs h width " + std::to_string(hid));
  require_shape(wxv.ndim() == 2 && wxv.dim(0) == xv.cols() && wxv.dim(1) == 4 * hid,
                "lstm_cell: wx must be [" + std::to_string(xv.cols()) + ", " +
                    std::to_string(4 * hid) + "], got " + wxv.shape_str());
  require_shape(whv.ndim() == 2 && whv.dim(0) == hid && whv.dim(1) == 4 * hid,
                "lstm_cell: wh must be [" + std::to_string(hid) + ", " +
                    std::to_string(4 * hid) + "], got " + whv.shape_str());
  require_shape(bv.numel() == 4 * hid, "lstm_cell: bias size " +
                                           std::to_string(bv.numel()) + " vs " +
                                           std::to_string(4 * hid));
  Node n;
  n.op = Op::kLstmCell;
  n.in = {x.id, h_prev.id, c_prev.id, wx.id, wh.id, b.id};
  return push(std::move(n));
}

Var Tape::nll_rows(Var logits, std::vector<int32_t> gold, std::vector<uint8_t> mask) {
  const Tensor& lv = value(logits);
  const int64_t rows = lv.rows(), cols = lv.cols();
  require_shape(static_cast<int64_t>(gold.size()) == rows,
                "nll_rows: gold size mismatch");
  require_shape(static_cast<int64_t>(mask.size()) == rows,
                "nll_rows: mask size mismatch");
  for (int64_t r = 0; r < rows; ++r) {
    if (mask[static_cast<size_t>(r)] && (gold[static_cast<size_t>(r)] < 0 ||
                                         gold[static_cast<size_t>(r)] >= cols)) {
      throw ShapeError("nll_rows: gold id out of range at row " + std::to_string(r));
    }
  }
  Node n;
  n.op = Op::kNllRows;
  n.in = {logits.id};
  n.idx = std::move(gold);
  n.mask = std::move(mask);
  return push(std::move(n));
}

Var Tape::crf_log_partition(Var unary, Var trans) {
  const Tensor& uv = value(unary);
  const Tensor& tv = value(trans);
  require_shape(uv.ndim() == 2 && uv.dim(0) >= 1, "crf_log_partition: unary must be [n, T] with n >= 1");
  require_shape(tv.ndim() == 2 && tv.dim(0) == uv.dim(1) && tv.dim(1) == uv.dim(1),
                "crf_log_partition: trans " + tv.shape_str() + " vs unary " + uv.shape_str());
  Node n;
  n.op = Op::kCrfLogZ;
  n.in = {unary.id, trans.id};
  return push(std::move(n));
}

Var Tape::crf_gold_score(Var unary, Var trans, std::vector<int32_t> gold) {
  const Tensor& uv = value(unary);
  const Tensor& tv = value(trans);
  require_shape(uv.ndim() == 2 && uv.dim(0) >= 1, "crf_gold_score: unary must be [n, T]");
  require_shape(tv.ndim() == 2 && tv.dim(0) == uv.dim(1) && tv.dim(1) == uv.dim(1),
                "crf_gold_score: trans " + tv.shape_str() + " vs unary " + uv.shape_str());
  require_shape(static_cast<int64_t>(gold.size()) == uv.dim(0),
                "crf_gold_score: gold length mismatch");
  for (int32_t g : gold) {
    require_shape(g >= 0 && g < uv.dim(1), "crf_gold_score: tag id out of range");
  }
  Node n;
  n.op = Op::kCrfGold;
  n.in = {unary.id, trans.id};
  n.idx = std::move(gold);
  return push(std::move(n));
}

Var Tape::sum_all(Var x) {
  Node n;
  n.op = Op::kSumAll;
  n.in = {x.id};
  return push(std::move(n));
}

void Tape::forward_eval(Node& n) {
  switch (n.op) {
    case Op::kLeaf:
    case Op::kInput:
      break;
    case Op::kSelectRows: {
      const Tensor& x = nodes_[static_cast<size_t>(n.in[0])].val;
      const int64_t cols = x.cols();
      const int64_t m = static_cast<int64_t>(n.idx.size());
      n.val = Tensor::zeros({m, cols});
      for (int64_t i = 0; i < m; ++i) {
        const Real* src = x.data() + static_cast<int64_t>(n.idx[static_cast<size_t>(i)]) * cols;
        std::copy(src, src + cols, n.val.data() + i * cols);
      }
      break;
    }
    case Op::kConv1d: {
      const Tensor& x = nodes_[static_cast<size_t>(n.in[0])].val;
      const Tensor& k = nodes_[static_cast<size_t>(n.in[1])].val;
      const Tensor& b = nodes_[static_cast<size_t>(n.in[2])].val;
      const int64_t t_steps = n.i0;
      const int64_t w = k.dim(0), ci = k.dim(1), co = k.dim(2);
      const int64_t nseq = x.rows() / t_steps;
      n.val = Tensor::zeros({x.rows(), co});
      for (int64_t s = 0; s < nseq; ++s) {
        const Real* xs = x.data() + s * t_steps * ci;
        Real* os = n.val.data() + s * t_steps * co;
        for (int64_t wi = 0; wi < w; ++wi) {
          const int64_t off = wi - (w - 1) / 2;
          const int64_t t0 = std::max<int64_t>(0, -off);
          const int64_t t1 = std::min<int64_t>(t_steps, t_steps - off);
          if (t1 <= t0) continue;
          gemm_nn_accum(os + t0 * co, xs + (t0 + off) * ci, k.data() + wi * ci * co,
                        t1 - t0, ci, co);
        }
      }
      add_bias_rows(n.val, b);
      break;
    }
    case Op::kRelu: {
      const Tensor& x = nodes_[static_cast<size_t>(n.in[0])].val;
      n.val = x;
      for (Real& e : n.val.v) e = e > Real(0) ? e : Real(0);
      break;
    }
    case Op::kSigmoid: {
      const Tensor& x = nodes_[static_cast<size_t>(n.in[0])].val;
      n.val = x;
      for (Real& e : n.val.v) e = nnmath::sigmoid(e);
      break;
    }
    case Op::kTanh: {
      const Tensor& x = nodes_[static_cast<size_t>(n.in[0])].val;
      n.val = x;
      for (Real& e : n.val.v) e = std::tanh(e);
      break;
    }
    case Op::kAdd: {
      const Tensor& a = nodes_[static_cast<size_t>(n.in[0])].val;
      const Tensor& b = nodes_[static_cast<size_t>(n.in[1])].val;
      n.val = a;
      for (size_t i = 0; i < n.val.v.size(); ++i) n.val.v[i] += b.v[i];
      break;
    }
    case Op::kMul: {
      const Tensor& a = nodes_[static_cast<size_t>(n.in[0])].val;
      const Tensor& b = nodes_[static_cast<size_t>(n.in[1])].val;
      n.val = a;
      for (size_t i = 0; i < n.val.v.size(); ++i) n.val.v[i] *= b.v[i];
      break;
    }
    case Op::kScale: {
      const Tensor& x = nodes_[static_cast<size_t>(n.in[0])].val;
      n.val = x;
      for (Real& e : n.val.v) e *= n.c0;
      break;
    }
    case Op::kScaleRows: {
      const Tensor& x = nodes_[static_cast<size_t>(n.in[0])].val;
      n.val = x;
      const int64_t cols = x.cols();
      for (int64_t r = 0; r < x.rows(); ++r) {
        const Real f = n.aux[static_cast<size_t>(r)];
        Real* row = n.val.data() + r * cols;
        for (int64_t j = 0; j < cols; ++j) row[j] *= f;
      }
      break;
    }
    case Op::kConcatCols: {
      const Tensor& a = nodes_[static_cast<size_t>(n.in[0])].val;
      const Tensor& b = nodes_[static_cast<size_t>(n.in[1])].val;
      const int64_t rows = a.rows(), ca = a.cols(), cb = b.cols();
      n.val = Tensor::zeros({rows, ca + cb});
      for (int64_t r = 0; r < rows; ++r) {
        Real* out = n.val.data() + r * (ca + cb);
        std::copy(a.data() + r * ca, a.data() + (r + 1) * ca, out);
        std::copy(b.data() + r * cb, b.data() + (r + 1) * cb, out + ca);
      }
      break;
    }
    case Op::kSliceCols: {
      const Tensor& x = nodes_[static_cast<size_t>(n.in[0])].val;
      const int64_t rows = x.rows(), cols = x.cols();
      n.val = Tensor::zeros({rows, n.i1});
      for (int64_t r = 0; r < rows; ++r) {
        const Real* src = x.data() + r * cols + n.i0;
        std::copy(src, src + n.i1, n.val.data() + r * n.i1);
      }
      break;
    }
    case Op::kStackSteps: {
      const Tensor& first = nodes_[static_cast<size_t>(n.in[0])].val;
      const int64_t batch = first.rows(), cols = first.cols();
      const int64_t steps = static_cast<int64_t>(n.in.size());
      n.val = Tensor::zeros({batch * steps, cols});
      for (int64_t t = 0; t < steps; ++t) {
        const Tensor& s = nodes_[static_cast<size_t>(n.in[static_cast<size_t>(t)])].val;
        for (int64_t b = 0; b < batch; ++b) {
          std::copy(s.data() + b * cols, s.data() + (b + 1) * cols,
                    n.val.data() + (b * steps + t) * cols);
        }
      }
      break;
    }
    case Op::kMaxPoolTime: {
      const Tensor& x = nodes_[static_cast<size_t>(n.in[0])].val;
      const int64_t t_steps = n.i0;
      const int64_t cols = x.cols();
      const int64_t nseq = x.rows() / t_steps;
      n.val = Tensor::zeros({nseq, cols});
      n.idx.assign(static_cast<size_t>(nseq * cols), 0);
      for (int64_t s = 0; s < nseq; ++s) {
        const int64_t len = n.idx2.empty() ? t_steps
                                           : static_cast<int64_t>(n.idx2[static_cast<size_t>(s)]);
        const Real* xs = x.data() + s * t_steps * cols;
        Real* out = n.val.data() + s * cols;
        int32_t* arg = n.idx.data() + s * cols;
        for (int64_t j = 0; j < cols; ++j) {
          Real best = xs[j];
          int32_t bt = 0;
          for (int64_t t = 1; t < len; ++t) {
            const Real v = xs[t * cols + j];
            if (v > best) {
              best = v;
              bt = static_cast<int32_t>(t);
            }
          }
          out[j] = best;
          arg[j] = bt;
        }
      }
      break;
    }
    case Op::kDropout: {
      const Tensor& x = nodes_[static_cast<size_t>(n.in[0])].val;
      n.val = x;
      for (size_t i = 0; i < n.val.v.size(); ++i) n.val.v[i] *= n.aux[i];
      break;
    }
    case Op::kAffine: {
      const Tensor& x = nodes_[static_cast<size_t>(n.in[0])].val;
      const Tensor& w = nodes_[static_cast<size_t>(n.in[1])].val;
      const Tensor& b = nodes_[static_cast<size_t>(n.in[2])].val;
      n.val = Tensor::zeros({x.rows(), w.dim(1)});
      gemm_nn_accum(n.val.data(), x.data(), w.data(), x.rows(), x.cols(), w.dim(1));
      add_bias_rows(n.val, b);
      break;
    }
    case Op::kLstmCell: {
      const Tensor& x = nodes_[static_cast<size_t>(n.in[0])].val;
      const Tensor& h = nodes_[static_cast<size_t>(n.in[1])].val;
      const Tensor& c = nodes_[static_cast<size_t>(n.in[2])].val;
      const Tensor& wx = nodes_[static_cast<size_t>(n.in[3])].val;
      const Tensor& wh = nodes_[static_cast<size_t>(n.in[4])].val;
      const Tensor& b = nodes_[static_cast<size_t>(n.in[5])].val;
      const int64_t batch = x.rows(), hid = h.cols();
      Tensor gates = Tensor::zeros({batch, 4 * hid});
      add_bias_rows(gates, b);
      gemm_nn_accum(gates.data(), x.data(), wx.data(), batch, x.cols(), 4 * hid);
      gemm_nn_accum(gates.data(), h.data(), wh.data(), batch, hid, 4 * hid);
      n.val = Tensor::zeros({batch, 2 * hid});
      n.aux.assign(static_cast<size_t>(batch * 5 * hid), Real(0));
      for (int64_t r = 0; r < batch; ++r) {
        Real* g = gates.data() + r * 4 * hid;
        Real* out = n.val.data() + r * 2 * hid;
        nnmath::lstm_activate(g, c.data() + r * hid, out, out + hid, hid);
        Real* save = n.aux.data() + r * 5 * hid;
        std::copy(g, g + 4 * hid, save);
        for (int64_t j = 0; j < hid; ++j) save[4 * hid + j] = std::tanh(out[hid + j]);
      }
      break;
    }
    case Op::kNllRows: {
      const Tensor& l = nodes_[static_cast<size_t>(n.in[0])].val;
      const int64_t rows = l.rows(), cols = l.cols();
      n.aux.assign(static_cast<size_t>(rows), Real(0));
      double loss = 0;
      for (int64_t r = 0; r < rows; ++r) {
        if (!n.mask[static_cast<size_t>(r)]) continue;
        const Real* row = l.data() + r * cols;
        const double lse = log_sum_exp(row, cols);
        n.aux[static_cast<size_t>(r)] = static_cast<Real>(lse);
        loss += lse - static_cast<double>(row[n.idx[static_cast<size_t>(r)]]);
      }
      n.val = Tensor::scalar(static_cast<Real>(loss));
      break;
    }
    case Op::kCrfLogZ: {
      const Tensor& u = nodes_[static_cast<size_t>(n.in[0])].val;
      const Tensor& a = nodes_[static_cast<size_t>(n.in[1])].val;
      const int64_t len = u.dim(0), tags = u.dim(1);
      n.aux.assign(static_cast<size_t>(len * tags), Real(0));
      std::vector<Real> tmp(static_cast<size_t>(tags));
      for (int64_t y = 0; y < tags; ++y) n.aux[static_cast<size_t>(y)] = u.at2(0, y);
      for (int64_t i = 1; i < len; ++i) {
        const Real* prev = n.aux.data() + (i - 1) * tags;
        Real* cur = n.aux.data() + i * tags;
        for (int64_t yn = 0; yn < tags; ++yn) {
          for (int64_t yp = 0; yp < tags; ++yp) {
            tmp[static_cast<size_t>(yp)] = prev[yp] + a.at2(yp, yn);
          }
          cur[yn] = u.at2(i, yn) + static_cast<Real>(log_sum_exp(tmp.data(), tags));
        }
      }
      n.val = Tensor::scalar(
          static_cast<Real>(log_sum_exp(n.aux.data() + (len - 1) * tags, tags)));
      break;
    }
    case Op::kCrfGold: {
      const Tensor& u = nodes_[static_cast<size_t>(n.in[0])].val;
      const Tensor& a = nodes_[static_cast<size_t>(n.in[1])].val;
      const int64_t len = u.dim(0);
      double s = 0;
      for (int64_t i = 0; i < len; ++i) {
        s += static_cast<double>(u.at2(i, n.idx[static_cast<size_t>(i)]));
        if (i > 0) {
          s += static_cast<double>(
              a.at2(n.idx[static_cast<size_t>(i - 1)], n.idx[static_cast<size_t>(i)]));
        }
      }
      n.val = Tensor::scalar(static_cast<Real>(s));
      break;
    }
    case Op::kSumAll: {
      const Tensor& x = nodes_[static_cast<size_t>(n.in[0])].val;
      double s = 0;
      for (Real e : x.v) s += static_cast<double>(e);
      n.val = Tensor::scalar(static_cast<Real>(s));
      break;
    }
  }
}

void Tape::backward(Var loss) {
  Node& ln = node(loss);
  if (ln.val.numel() != 1) {
    throw ContractError("Tape::backward: loss must be a scalar, got shape " +
                        ln.val.shape_str());
  }
  if (backward_done_) {
    throw ContractError("Tape::backward: one backward pass per tape");
  }
  backward_done_ = true;
  ensure_grad(ln);
  ln.grad.v[0] = Real(1);
  for (int64_t i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.grad.v.empty()) continue;
    backward_eval(n);
  }
}

void Tape::backward_eval(Node& n) {
  auto in_val = [&](int slot) -> const Tensor& {
    return nodes_[static_cast<size_t>(n.in[static_cast<size_t>(slot)])].val;
  };
  auto in_grad = [&](int slot) -> Tensor& {
    Node& m = nodes_[static_cast<size_t>(n.in[static_cast<size_t>(slot)])];
    ensure_grad(m);
    return m.grad;
  };
  switch (n.op) {
    case Op::kLeaf: {
      Tensor& pg = n.param->grad;
      if (!pg.same_shape(n.val)) {
        throw ContractError("Tape: parameter grad shape changed for " + n.param->name);
      }
      for (size_t i = 0; i < pg.v.size(); ++i) pg.v[i] += n.grad.v[i];
      break;
    }
    case Op::kInput:
      break;
    case Op::kSelectRows: {
      Tensor& dx = in_grad(0);
      const int64_t cols = dx.cols();
      for (size_t i = 0; i < n.idx.size(); ++i) {
        const Real* src = n.grad.data() + static_cast<int64_t>(i) * cols;
        Real* dst = dx.data() + static_cast<int64_t>(n.idx[i]) * cols;
        for (int64_t j = 0; j < cols; ++j) dst[j] += src[j];
      }
      break;
    }
    case Op::kConv1d: {
      const Tensor& x = in_val(0);
      const Tensor& k = in_val(1);
      Tensor& dx = in_grad(0);
      Tensor& dk = in_grad(1);
      Tensor& db = in_grad(2);
      const int64_t t_steps = n.i0;
      const int64_t w = k.dim(0), ci = k.dim(1), co = k.dim(2);
      const int64_t nseq = x.rows() / t_steps;
      for (int64_t s = 0; s < nseq; ++s) {
        const Real* xs = x.data() + s * t_steps * ci;
        Real* dxs = dx.data() + s * t_steps * ci;
        const Real* dos = n.grad.data() + s * t_steps * co;
        for (int64_t wi = 0; wi < w; ++wi) {
          const int64_t off = wi - (w - 1) / 2;
          const int64_t t0 = std::max<int64_t>(0, -off);
          const int64_t t1 = std::min<int64_t>(t_steps, t_steps - off);
          if (t1 <= t0) continue;
          const int64_t len = t1 - t0;
          gemm_nt_accum(dxs + (t0 + off) * ci, dos + t0 * co, k.data() + wi * ci * co,
                        len, co, ci);
          gemm_tn_accum(dk.data() + wi * ci * co, xs + (t0 + off) * ci, dos + t0 * co,
                        len, ci, co);
        }
      }
      add_col_sums(db, n.grad);
      break;
    }
    case Op::kRelu: {
      Tensor& dx = in_grad(0);
      for (size_t i = 0; i < dx.v.size(); ++i) {
        if (n.val.v[i] > Real(0)) dx.v[i] += n.grad.v[i];
      }
      break;
    }
    case Op::kSigmoid: {
      Tensor& dx = in_grad(0);
      for (size_t i = 0; i < dx.v.size(); ++i) {
        dx.v[i] += n.grad.v[i] * n.val.v[i] * (Real(1) - n.val.v[i]);
      }
      break;
    }
    case Op::kTanh: {
      Tensor& dx = in_grad(0);
      for (size_t i = 0; i < dx.v.size(); ++i) {
        dx.v[i] += n.grad.v[i] * (Real(1) - n.val.v[i] * n.val.v[i]);
      }
      break;
    }
    case Op::kAdd: {
      Tensor& da = in_grad(0);
      Tensor& db = in_grad(1);
      for (size_t i = 0; i < da.v.size(); ++i) da.v[i] += n.grad.v[i];
      for (size_t i = 0; i < db.v.size(); ++i) db.v[i] += n.grad.v[i];
      break;
    }
    case Op::kMul: {
      const Tensor& a = in_val(0);
      const Tensor& b = in_val(1);
      Tensor& da = in_grad(0);
      Tensor& db = in_grad(1);
      for (size_t i = 0; i < da.v.size(); ++i) {
        da.v[i] += n.grad.v[i] * b.v[i];
        db.v[i] += n.grad.v[i] * a.v[i];
      }
      break;
    }
    case Op::kScale: {
      Tensor& dx = in_grad(0);
      for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += n.grad.v[i] * n.c0;
      break;
    }
    case Op::kScaleRows: {
      Tensor& dx = in_grad(0);
      const int64_t cols = dx.cols();
      for (int64_t r = 0; r < dx.rows(); ++r) {
        const Real f = n.aux[static_cast<size_t>(r)];
        const Real* g = n.grad.data() + r * cols;
        Real* d = dx.data() + r * cols;
        for (int64_t j = 0; j < cols; ++j) d[j] += f * g[j];
      }
      break;
    }
    case Op::kConcatCols: {
      Tensor& da = in_grad(0);
      Tensor& db = in_grad(1);
      const int64_t rows = da.rows(), ca = da.cols(), cb = db.cols();
      for (int64_t r = 0; r < rows; ++r) {
        const Real* g = n.grad.data() + r * (ca + cb);
        Real* pa = da.data() + r * ca;
        Real* pb = db.data() + r * cb;
        for (int64_t j = 0; j < ca; ++j) pa[j] += g[j];
        for (int64_t j = 0; j < cb; ++j) pb[j] += g[ca + j];
      }
      break;
    }
    case Op::kSliceCols: {
      Tensor& dx = in_grad(0);
      const int64_t cols = dx.cols();
      for (int64_t r = 0; r < dx.rows(); ++r) {
        const Real* g = n.grad.data() + r * n.i1;
        Real* d = dx.data() + r * cols + n.i0;
        for (int64_t j = 0; j < n.i1; ++j) d[j] += g[j];
      }
      break;
    }
    case Op::kStackSteps: {
      const int64_t steps = static_cast<int64_t>(n.in.size());
      const int64_t cols = n.val.cols();
      const int64_t batch = n.val.rows() / steps;
      for (int64_t t = 0; t < steps; ++t) {
        Tensor& ds = in_grad(static_cast<int>(t));
        for (int64_t b = 0; b < batch; ++b) {
          const Real* g = n.grad.data() + (b * steps + t) * cols;
          Real* d = ds.data() + b * cols;
          for (int64_t j = 0; j < cols; ++j) d[j] += g[j];
        }
      }
      break;
    }
    case Op::kMaxPoolTime: {
      Tensor& dx = in_grad(0);
      const int64_t t_steps = n.i0;
      const int64_t cols = dx.cols();
      const int64_t nseq = n.val.rows();
      for (int64_t s = 0; s < nseq; ++s) {
        const Real* g = n.grad.data() + s * cols;
        const int32_t* arg = n.idx.data() + s * cols;
        for (int64_t j = 0; j < cols; ++j) {
          dx.data()[(s * t_steps + arg[j]) * cols + j] += g[j];
        }
      }
      break;
    }
    case Op::kDropout: {
      Tensor& dx = in_grad(0);
      for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += n.grad.v[i] * n.aux[i];
      break;
    }
    case Op::kAffine: {
      const Tensor& x = in_val(0);
      const Tensor& w = in_val(1);
      Tensor& dx = in_grad(0);
      Tensor& dw = in_grad(1);
      Tensor& db = in_grad(2);
      gemm_nt_accum(dx.data(), n.grad.data(), w.data(), x.rows(), w.dim(1), w.dim(0));
      gemm_tn_accum(dw.data(), x.data(), n.grad.data(), x.rows(), x.cols(), w.dim(1));
      add_col_sums(db, n.grad);
      break;
    }
    case Op::kLstmCell: {
      const Tensor& x = in_val(0);
      const Tensor& h = in_val(1);
      const Tensor& c = in_val(2);
      const Tensor& wx = in_val(3);
      const Tensor& wh = in_val(4);
      Tensor& dx = in_grad(0);
      Tensor& dh = in_grad(1);
      Tensor& dc = in_grad(2);
      Tensor& dwx = in_grad(3);
      Tensor& dwh = in_grad(4);
      Tensor& db = in_grad(5);
      const int64_t batch = x.rows(), hid = h.cols();
      Tensor dgates = Tensor::zeros({batch, 4 * hid});
      for (int64_t r = 0; r < batch; ++r) {
        const Real* save = n.aux.data() + r * 5 * hid;
        const Real* gi = save;
        const Real* gf = save + hid;
        const Real* gg = save + 2 * hid;
        const Real* go = save + 3 * hid;
        const Real* tc = save + 4 * hid;
        const Real* gout = n.grad.data() + r * 2 * hid;
        const Real* cp = c.data() + r * hid;
        Real* dg = dgates.data() + r * 4 * hid;
        Real* dcp = dc.data() + r * hid;
        for (int64_t j = 0; j < hid; ++j) {
          const Real dh_j = gout[j];
          const Real dc_ext = gout[hid + j];
          const Real dct = dc_ext + dh_j * go[j] * (Real(1) - tc[j] * tc[j]);
          const Real di = dct * gg[j];
          const Real df = dct * cp[j];
          const Real dgv = dct * gi[j];
          const Real dov = dh_j * tc[j];
          dg[j] = di * gi[j] * (Real(1) - gi[j]);
          dg[hid + j] = df * gf[j] * (Real(1) - gf[j]);
          dg[2 * hid + j] = dgv * (Real(1) - gg[j] * gg[j]);
          dg[3 * hid + j] = dov * go[j] * (Real(1) - go[j]);
          dcp[j] += dct * gf[j];
        }
      }
      gemm_nt_accum(dx.data(), dgates.data(), wx.data(), batch, 4 * hid, x.cols());
      gemm_nt_accum(dh.data(), dgates.data(), wh.data(), batch, 4 * hid, hid);
      gemm_tn_accum(dwx.data(), x.data(), dgates.data(), batch, x.cols(), 4 * hid);
      gemm_tn_accum(dwh.data(), h.data(), dgates.data(), batch, hid, 4 * hid);
      add_col_sums(db, dgates);
      break;
    }
    case Op::kNllRows: {
      const Tensor& l = in_val(0);
      Tensor& dl = in_grad(0);
      const int64_t rows = l.rows(), cols = l.cols();
      const Real up = n.grad.v[0];
      for (int64_t r = 0; r < rows; ++r) {
        if (!n.mask[static_cast<size_t>(r)]) continue;
        const Real* row = l.data() + r * cols;
        Real* d = dl.data() + r * cols;
        const Real lse = n.aux[static_cast<size_t>(r)];
        const int32_t g = n.idx[static_cast<size_t>(r)];
        for (int64_t j = 0; j < cols; ++j) {
          Real p = std::exp(row[j] - lse);
          if (j == g) p -= Real(1);
          d[j] += up * p;
        }
      }
      break;
    }
    case Op::kCrfLogZ: {
      const Tensor& u = in_val(0);
      const Tensor& a = in_val(1);
      Tensor& du = in_grad(0);
      Tensor& da = in_grad(1);
      const int64_t len = u.dim(0), tags = u.dim(1);
      const Real up = n.grad.v[0];
      const double logz = static_cast<double>(n.val.v[0]);
      // beta[i][y] = log sum over suffixes continuing from tag y at step i
      std::vector<double> beta(static_cast<size_t>(len * tags), 0.0);
      std::vector<double> tmp(static_cast<size_t>(tags));
      for (int64_t i = len - 2; i >= 0; --i) {
        double* cur = beta.data() + i * tags;
        const double* nxt = beta.data() + (i + 1) * tags;
        for (int64_t y = 0; y < tags; ++y) {
          double mx = -1e300;
          for (int64_t yn = 0; yn < tags; ++yn) {
            tmp[static_cast<size_t>(yn)] = static_cast<double>(a.at2(y, yn)) +
                                           static_cast<double>(u.at2(i + 1, yn)) + nxt[yn];
            mx = std::max(mx, tmp[static_cast<size_t>(yn)]);
          }
          double s = 0;
          for (int64_t yn = 0; yn < tags; ++yn) s += std::exp(tmp[static_cast<size_t>(yn)] - mx);
          cur[y] = mx + std::log(s);
        }
      }
      for (int64_t i = 0; i < len; ++i) {
        const Real* alpha = n.aux.data() + i * tags;
        const double* bet = beta.data() + i * tags;
        for (int64_t y = 0; y < tags; ++y) {
          du.at2(i, y) += up * static_cast<Real>(
                                   std::exp(static_cast<double>(alpha[y]) + bet[y] - logz));
        }
      }
      for (int64_t i = 1; i < len; ++i) {
        const Real* alpha_prev = n.aux.data() + (i - 1) * tags;
        const double* bet = beta.data() + i * tags;
        for (int64_t yp = 0; yp < tags; ++yp) {
          for (int64_t yn = 0; yn < tags; ++yn) {
            const double m = std::exp(static_cast<double>(alpha_prev[yp]) +
                                      static_cast<double>(a.at2(yp, yn)) +
                                      static_cast<double>(u.at2(i, yn)) + bet[yn] - logz);
            da.at2(yp, yn) += up * static_cast<Real>(m);
          }
        }
      }
      break;
    }
    case Op::kCrfGold: {
      Tensor& du = in_grad(0);
      Tensor& da = in_grad(1);
      const int64_t len = in_val(0).dim(0);
      const Real up = n.grad.v[0];
      for (int64_t i = 0; i < len; ++i) {
        du.at2(i, n.idx[static_cast<size_t>(i)]) += up;
        if (i > 0) {
          da.at2(n.idx[static_cast<size_t>(i - 1)], n.idx[static_cast<size_t>(i)]) += up;
        }
      }
      break;
    }
    case Op::kSumAll: {
      Tensor& dx = in_grad(0);
      const Real up = n.grad.v[0];
      for (Real& e : dx.v) e += up;
      break;
    }
  }
}

void Tape::replay_forward() {
  for (Node& n : nodes_) forward_eval(n);
}

LstmStepOut lstm_step(Tape& t, Var x, Var h_prev, Var c_prev, Var wx, Var wh,
                      Var b) {
  Var hc = t.lstm_cell(x, h_prev, c_prev, wx, wh, b);
  const int64_t hid = t.value(hc).cols() / 2;
  return LstmStepOut{t.slice_cols(hc, 0, hid), t.slice_cols(hc, hid, hid)};
}

}  // namespace seqal
