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
#include <vector>

#include "doctest.h"
#include "seqal/errors.hpp"
#include "seqal/gradcheck.hpp"
#include "seqal/nnmath.hpp"
#include "seqal/params.hpp"
#include "seqal/rng.hpp"
#include "seqal/tape.hpp"
#include "seqal/tensor.hpp"

using namespace seqal;

namespace {

Parameter make_param(const std::string& name, std::vector<int64_t> shape,
                     Rng& rng, double lo = -0.8, double hi = 0.8) {
  Parameter p;
  p.name = name;
  p.value = Tensor::zeros(std::move(shape));
  for (Real& x : p.value.v) x = static_cast<Real>(rng.uniform(lo, hi));
  p.grad = Tensor::zeros(p.value.shape);
  return p;
}

// Finite-difference pass over a scalar built from parameter leaves.
void expect_grads_ok(Tape& tape, Var loss, double tol = 1e-4) {
  Rng pick(99);
  GradCheckResult res = finite_diff_check(tape, loss, 1e-5, 25, &pick);
  CAPTURE(res.worst_param);
  CAPTURE(res.worst_coord);
  CHECK(res.max_rel_err <= tol);
}

}  // namespace

TEST_CASE("rng uniform stays in the unit interval and is deterministic") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    double x = a.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(x == b.uniform());
  }
}

TEST_CASE("rng uniform_int covers its range and rejects bad input") {
  Rng rng(7);
  std::vector<int> seen(5, 0);
  for (int i = 0; i < 5000; ++i) {
    int64_t x = rng.uniform_int(5);
    REQUIRE(x >= 0);
    REQUIRE(x < 5);
    seen[static_cast<size_t>(x)] += 1;
  }
  for (int count : seen) CHECK(count > 800);
  CHECK_THROWS_AS(rng.uniform_int(0), ParamError);
}

TEST_CASE("rng shuffle yields a permutation") {
  Rng rng(3);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<int> orig = v;
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == orig);
}

TEST_CASE("rng streams with different ids disagree") {
  Rng a = Rng::stream(5, 1);
  Rng b = Rng::stream(5, 2);
  Rng a2 = Rng::stream(5, 1);
  CHECK(a.next_u64() == a2.next_u64());
  Rng c = Rng::stream(5, 1);
  Rng d = Rng::stream(5, 2);
  int differ = 0;
  for (int i = 0; i < 16; ++i)
    if (c.next_u64() != d.next_u64()) ++differ;
  CHECK(differ > 10);
}

TEST_CASE("tensor construction and row-major indexing") {
  Tensor t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.at2(1, 0) == 4);
  CHECK(t.at2(0, 2) == 3);
  Tensor z = Tensor::zeros({2, 2, 2});
  CHECK(z.numel() == 8);
  CHECK(z.rows() == 4);
  Tensor s = Tensor::scalar(2.5);
  CHECK(s.numel() == 1);
}

TEST_CASE("elementwise tape ops match direct evaluation") {
  Tape tape;
  Var x = tape.input(Tensor::from({2, 2}, {-1.0, 0.0, 0.5, 2.0}));
  Var y = tape.input(Tensor::from({2, 2}, {3.0, -2.0, 1.0, 0.5}));
  CHECK(tape.value(tape.relu(x)).v == std::vector<Real>{0.0, 0.0, 0.5, 2.0});
  const Tensor& sum = tape.value(tape.add(x, y));
  CHECK(sum.v == std::vector<Real>{2.0, -2.0, 1.5, 2.5});
  const Tensor& prod = tape.value(tape.mul(x, y));
  CHECK(prod.v == std::vector<Real>{-3.0, 0.0, 0.5, 1.0});
  const Tensor& sc = tape.value(tape.scale(x, 2.0));
  CHECK(sc.v == std::vector<Real>{-2.0, 0.0, 1.0, 4.0});
  const Tensor& sg = tape.value(tape.sigmoid(x));
  CHECK(sg.v[1] == doctest::Approx(0.5));
  const Tensor& th = tape.value(tape.tanh(x));
  CHECK(th.v[3] == doctest::Approx(std::tanh(2.0)));
  const Tensor& total = tape.value(tape.sum_all(y));
  CHECK(total.v[0] == doctest::Approx(2.5));
}

TEST_CASE("select_rows gathers and scale_rows scales") {
  Tape tape;
  Var x = tape.input(Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6}));
  const Tensor& g = tape.value(tape.select_rows(x, {2, 0, 2}));
  CHECK(g.v == std::vector<Real>{5, 6, 1, 2, 5, 6});
  const Tensor& s = tape.value(tape.scale_rows(x, {1.0, 0.0, 2.0}));
  CHECK(s.v == std::vector<Real>{1, 2, 0, 0, 10, 12});
}

TEST_CASE("concat and slice are inverses") {
  Tape tape;
  Var a = tape.input(Tensor::from({2, 2}, {1, 2, 3, 4}));
  Var b = tape.input(Tensor::from({2, 1}, {9, 8}));
  Var cat = tape.concat_cols(a, b);
  CHECK(tape.value(cat).v == std::vector<Real>{1, 2, 9, 3, 4, 8});
  CHECK(tape.value(tape.slice_cols(cat, 0, 2)).v ==
        std::vector<Real>{1, 2, 3, 4});
  CHECK(tape.value(tape.slice_cols(cat, 2, 1)).v == std::vector<Real>{9, 8});
}

TEST_CASE("stack_steps interleaves step grids per sequence") {
  Tape tape;
  Var s0 = tape.input(Tensor::from({2, 1}, {1, 2}));
  Var s1 = tape.input(Tensor::from({2, 1}, {3, 4}));
  const Tensor& out = tape.value(tape.stack_steps({s0, s1}));
  CHECK(out.v == std::vector<Real>{1, 3, 2, 4});
}

TEST_CASE("max_pool_time honors lengths and breaks ties at the first index") {
  Tape tape;
  // Two sequences of 3 steps, 1 column.
  Var x = tape.input(Tensor::from({6, 1}, {5, 9, 9, 1, 2, 3}));
  const Tensor& full = tape.value(tape.max_pool_time(x, 3));
  CHECK(full.v == std::vector<Real>{9, 3});
  const Tensor& cut = tape.value(tape.max_pool_time(x, 3, {1, 2}));
  CHECK(cut.v == std::vector<Real>{5, 2});
}

TEST_CASE("conv1d_same matches a hand-rolled cross-correlation") {
  Tape tape;
  // One sequence, 4 steps, 1 channel; kernel width 3, 1 output channel.
  Var x = tape.input(Tensor::from({4, 1}, {1, 2, 3, 4}));
  Var k = tape.input(Tensor::from({3, 1, 1}, {10, 1, 0.1}));
  Var b = tape.input(Tensor::from({1, 1}, {0.5}));
  const Tensor& out = tape.value(tape.conv1d_same(x, k, b, 4));
  // out[t] = 10*x[t-1] + 1*x[t] + 0.1*x[t+1] + 0.5, zeros beyond the ends.
  CHECK(out.v[0] == doctest::Approx(0 + 1 + 0.2 + 0.5));
  CHECK(out.v[1] == doctest::Approx(10 + 2 + 0.3 + 0.5));
  CHECK(out.v[2] == doctest::Approx(20 + 3 + 0.4 + 0.5));
  CHECK(out.v[3] == doctest::Approx(30 + 4 + 0 + 0.5));
}

TEST_CASE("conv1d_same windows never cross sequence boundaries") {
  Tape tape;
  // Two sequences of 2 steps. A window at the end of sequence 0 must not
  // read the start of sequence 1.
  Var x = tape.input(Tensor::from({4, 1}, {1, 2, 100, 200}));
  Var k = tape.input(Tensor::from({3, 1, 1}, {0, 0, 1}));
  Var b = tape.input(Tensor::from({1, 1}, {0}));
  const Tensor& out = tape.value(tape.conv1d_same(x, k, b, 2));
  CHECK(out.v == std::vector<Real>{2, 0, 200, 0});
}

TEST_CASE("affine matches x*w + b") {
  Tape tape;
  Var x = tape.input(Tensor::from({1, 2}, {2, 3}));
  Var w = tape.input(Tensor::from({2, 2}, {1, 0, 0, 1}));
  Var b = tape.input(Tensor::from({1, 2}, {10, 20}));
  const Tensor& out = tape.value(tape.affine(x, w, b));
  CHECK(out.v == std::vector<Real>{12, 23});
}

TEST_CASE("lstm_cell closed form with zero weights") {
  // With all weights and biases zero: i=f=o=sigmoid(0)=0.5, g=tanh(0)=0, so
  // c = 0.5*c_prev and h = 0.5*tanh(0.5*c_prev).
  Tape tape;
  const int64_t B = 2, H = 3, X = 2;
  Var x = tape.input(Tensor::from({B, X}, {1, -1, 2, 0.5}));
  Tensor cp = Tensor::from({B, H}, {0.4, -0.2, 1.0, 0.0, 2.0, -1.0});
  Var h_prev = tape.input(Tensor::zeros({B, H}));
  Var c_prev = tape.input(cp);
  Var wx = tape.input(Tensor::zeros({X, 4 * H}));
  Var wh = tape.input(Tensor::zeros({H, 4 * H}));
  Var b = tape.input(Tensor::zeros({1, 4 * H}));
  const Tensor& out = tape.value(tape.lstm_cell(x, h_prev, c_prev, wx, wh, b));
  REQUIRE(out.shape == std::vector<int64_t>{B, 2 * H});
  for (int64_t r = 0; r < B; ++r) {
    for (int64_t j = 0; j < H; ++j) {
      double c = 0.5 * cp.at2(r, j);
      CHECK(out.at2(r, j) == doctest::Approx(0.5 * std::tanh(c)));
      CHECK(out.at2(r, H + j) == doctest::Approx(c));
    }
  }
}

TEST_CASE("dropout is identity in eval mode and at p=0") {
  Tape tape;
  Tensor t = Tensor::from({2, 2}, {1, 2, 3, 4});
  Rng rng(1);
  Var x = tape.input(t);
  CHECK(tape.value(tape.dropout(x, 0.5, Mode::kEval, rng)).v == t.v);
  CHECK(tape.value(tape.dropout(x, 0.0, Mode::kTrain, rng)).v == t.v);
}

TEST_CASE("train-mode dropout zeroes or rescales and preserves the mean") {
  Rng rng(11);
  const double p = 0.5;
  double sum = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    Tape tape;
    Var x = tape.input(Tensor::from({1, 1}, {2.0}));
    const Tensor& out = tape.value(tape.dropout(x, p, Mode::kTrain, rng));
    bool zeroed = out.v[0] == 0.0;
    bool scaled = out.v[0] == doctest::Approx(2.0 / (1.0 - p));
    CHECK((zeroed || scaled));
    sum += out.v[0];
  }
  CHECK(sum / n == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("nll_rows sums masked cross entropy") {
  Tape tape;
  Var logits = tape.input(Tensor::from({2, 2}, {0.0, 0.0, 5.0, 0.0}));
  const Tensor& out =
      tape.value(tape.nll_rows(logits, {1, 0}, {1, 0}));
  CHECK(out.v[0] == doctest::Approx(std::log(2.0)));
  Tape tape2;
  Var logits2 = tape2.input(Tensor::from({2, 2}, {0.0, 0.0, 5.0, 0.0}));
  const Tensor& both =
      tape2.value(tape2.nll_rows(logits2, {1, 0}, {1, 1}));
  double second = -5.0 + std::log(std::exp(5.0) + std::exp(0.0));
  CHECK(both.v[0] == doctest::Approx(std::log(2.0) + second));
}

TEST_CASE("replay_forward reproduces recorded values bit for bit") {
  Rng rng(5);
  Tape tape;
  Var x = tape.input(Tensor::from({4, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 1, 2, 3}));
  Var d = tape.dropout(x, 0.5, Mode::kTrain, rng);
  Var y = tape.relu(d);
  Var s = tape.sum_all(y);
  Tensor before = tape.value(s);
  tape.replay_forward();
  CHECK(tape.value(s).v == before.v);
  CHECK(tape.value(d).v.size() == 12);
}

TEST_CASE("backward gives exact gradients for a linear chain") {
  // loss = sum(2 * (x + x)) so dloss/dx = 4 everywhere.
  ParamStore store;
  Parameter& p = store.add("x", {2, 2});
  p.value = Tensor::from({2, 2}, {1, 2, 3, 4});
  Tape tape;
  Var x = tape.leaf(p);
  Var loss = tape.sum_all(tape.scale(tape.add(x, x), 2.0));
  store.zero_grads();
  tape.backward(loss);
  for (Real g : p.grad.v) CHECK(g == doctest::Approx(4.0));
}

TEST_CASE("finite differences confirm every primitive's gradient") {
  Rng rng(21);
  ParamStore store;

  SUBCASE("conv relu residual pool chain") {
    Parameter k = make_param("k", {3, 2, 2}, rng);
    Parameter b = make_param("b", {1, 2}, rng);
    Parameter x = make_param("x", {6, 2}, rng);
    Tape tape;
    Var vx = tape.leaf(x);
    Var c = tape.conv1d_same(vx, tape.leaf(k), tape.leaf(b), 3);
    Var r = tape.relu(c);
    Var res = tape.add(r, vx);
    Var pooled = tape.max_pool_time(res, 3, {2, 3});
    expect_grads_ok(tape, tape.sum_all(pooled));
  }

  SUBCASE("affine sigmoid tanh mul") {
    Parameter w = make_param("w", {3, 2}, rng);
    Parameter b = make_param("b", {1, 2}, rng);
    Parameter x = make_param("x", {4, 3}, rng);
    Tape tape;
    Var a = tape.affine(tape.leaf(x), tape.leaf(w), tape.leaf(b));
    Var y = tape.mul(tape.sigmoid(a), tape.tanh(a));
    expect_grads_ok(tape, tape.sum_all(y));
  }

  SUBCASE("lstm_cell") {
    const int64_t B = 3, H = 4, X = 3;
    Parameter x = make_param("x", {B, X}, rng);
    Parameter h = make_param("h", {B, H}, rng);
    Parameter c = make_param("c", {B, H}, rng);
    Parameter wx = make_param("wx", {X, 4 * H}, rng);
    Parameter wh = make_param("wh", {H, 4 * H}, rng);
    Parameter b = make_param("b", {1, 4 * H}, rng);
    Tape tape;
    Var out = tape.lstm_cell(tape.leaf(x), tape.leaf(h), tape.leaf(c),
                             tape.leaf(wx), tape.leaf(wh), tape.leaf(b));
    expect_grads_ok(tape, tape.sum_all(tape.tanh(out)));
  }

  SUBCASE("select scale_rows concat slice stack") {
    Parameter x = make_param("x", {3, 2}, rng);
    Parameter y = make_param("y", {3, 2}, rng);
    Tape tape;
    Var vx = tape.leaf(x);
    Var sel = tape.select_rows(vx, {0, 2, 1, 0});
    Var sc = tape.scale_rows(sel, {1.0, 0.5, 2.0, 0.0});
    Var cat = tape.concat_cols(tape.select_rows(tape.leaf(y), {0, 1, 2, 0}), sc);
    Var sub = tape.slice_cols(cat, 1, 2);
    Var st = tape.stack_steps({sub, sub});
    expect_grads_ok(tape, tape.sum_all(tape.tanh(st)));
  }

  SUBCASE("dropout with stored mask") {
    Parameter x = make_param("x", {4, 4}, rng);
    Tape tape;
    Rng drop_rng(17);
    Var d = tape.dropout(tape.leaf(x), 0.5, Mode::kTrain, drop_rng);
    expect_grads_ok(tape, tape.sum_all(tape.tanh(d)));
  }

  SUBCASE("nll_rows") {
    Parameter x = make_param("x", {4, 3}, rng);
    Tape tape;
    Var loss = tape.nll_rows(tape.leaf(x), {0, 2, 1, 0}, {1, 1, 0, 1});
    expect_grads_ok(tape, loss);
  }

  SUBCASE("crf partition minus gold score") {
    Parameter unary = make_param("unary", {5, 3}, rng);
    Parameter trans = make_param("trans", {3, 3}, rng);
    Tape tape;
    Var vu = tape.leaf(unary);
    Var vt = tape.leaf(trans);
    Var z = tape.crf_log_partition(vu, vt);
    Var gold = tape.crf_gold_score(vu, vt, {0, 2, 1, 1, 0});
    Var loss = tape.add(z, tape.scale(gold, -1.0));
    expect_grads_ok(tape, loss);
  }
}

TEST_CASE("sgd_update applies lr and skips frozen parameters") {
  ParamStore store;
  Parameter& a = store.add("a", {2});
  Parameter& frozen = store.add("b", {2}, false);
  a.value = Tensor::from({2}, {1.0, 2.0});
  a.grad = Tensor::from({2}, {0.5, -1.0});
  frozen.value = Tensor::from({2}, {3.0, 4.0});
  frozen.grad = Tensor::from({2}, {9.0, 9.0});
  sgd_update(store, 0.1);
  CHECK(a.value.v[0] == doctest::Approx(0.95));
  CHECK(a.value.v[1] == doctest::Approx(2.1));
  CHECK(frozen.value.v == std::vector<Real>{3.0, 4.0});
}

TEST_CASE("clip_global_grad_norm rescales only above the cap") {
  ParamStore store;
  Parameter& a = store.add("a", {2});
  a.grad = Tensor::from({2}, {3.0, 4.0});
  double norm = clip_global_grad_norm(store, 10.0);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(a.grad.v == std::vector<Real>{3.0, 4.0});
  norm = clip_global_grad_norm(store, 1.0);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(a.grad.v[0] == doctest::Approx(0.6));
  CHECK(a.grad.v[1] == doctest::Approx(0.8));
}

TEST_CASE("glorot init stays inside its bound") {
  Rng rng(9);
  Tensor t = Tensor::zeros({20, 30});
  init_uniform_glorot(t, 20, 30, rng);
  double bound = std::sqrt(6.0 / 50.0);
  double mx = 0;
  for (Real x : t.v) mx = std::max(mx, std::abs(static_cast<double>(x)));
  CHECK(mx <= bound + 1e-12);
  CHECK(mx > bound * 0.8);
}

TEST_CASE("log_sum_exp and log_softmax are stable and exact") {
  std::vector<Real> x{1000.0, 1000.0};
  CHECK(nnmath::log_sum_exp(x.data(), 2) ==
        doctest::Approx(1000.0 + std::log(2.0)));
  std::vector<double> out(2);
  nnmath::log_softmax(x.data(), 2, out.data());
  CHECK(out[0] == doctest::Approx(-std::log(2.0)));
}
