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

#include <benchmark/benchmark.h>

#include <vector>

#include "seqal/crf.hpp"
#include "seqal/nnmath.hpp"
#include "seqal/rng.hpp"
#include "seqal/submod.hpp"
#include "seqal/tape.hpp"
#include "seqal/tensor.hpp"

namespace {

using seqal::Real;
using seqal::Rng;
using seqal::Tensor;

Tensor random_tensor(std::vector<int64_t> shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (Real& x : t.v) x = static_cast<Real>(rng.uniform(-1.0, 1.0));
  return t;
}

void BM_GemmNN(benchmark::State& state) {
  int64_t n = state.range(0);
  Rng rng(1);
  Tensor a = random_tensor({n, n}, rng);
  Tensor b = random_tensor({n, n}, rng);
  Tensor c = Tensor::zeros({n, n});
  for (auto _ : state) {
    seqal::nnmath::gemm_nn_accum(c.v.data(), a.v.data(), b.v.data(), n, n, n);
    benchmark::DoNotOptimize(c.v.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_GemmNN)->Arg(64)->Arg(128)->Arg(256);

void BM_Conv1dSame(benchmark::State& state) {
  const int64_t rows = 512, in = 32, out = 64, width = 3;
  Rng rng(1);
  Tensor x = random_tensor({rows, in}, rng);
  Tensor k = random_tensor({width, in, out}, rng);
  Tensor b = random_tensor({1, out}, rng);
  for (auto _ : state) {
    seqal::Tape tape;
    auto vx = tape.input(x);
    auto vk = tape.input(k);
    auto vb = tape.input(b);
    auto y = tape.conv1d_same(vx, vk, vb, rows);
    benchmark::DoNotOptimize(tape.value(y).v.data());
  }
  state.SetItemsProcessed(state.iterations() * rows * in * out * width);
}
BENCHMARK(BM_Conv1dSame);

void BM_LstmCell(benchmark::State& state) {
  const int64_t batch = 32, units = 64, in = 128;
  Rng rng(1);
  Tensor x = random_tensor({batch, in}, rng);
  Tensor h = random_tensor({batch, units}, rng);
  Tensor c = random_tensor({batch, units}, rng);
  Tensor wx = random_tensor({in, 4 * units}, rng);
  Tensor wh = random_tensor({units, 4 * units}, rng);
  Tensor b = random_tensor({1, 4 * units}, rng);
  for (auto _ : state) {
    seqal::Tape tape;
    auto out = tape.lstm_cell(tape.input(x), tape.input(h), tape.input(c),
                              tape.input(wx), tape.input(wh), tape.input(b));
    benchmark::DoNotOptimize(tape.value(out).v.data());
  }
  state.SetItemsProcessed(state.iterations() * batch * (in + units) * 4 * units);
}
BENCHMARK(BM_LstmCell);

void BM_CrfLogPartition(benchmark::State& state) {
  int64_t t = state.range(0);
  const int64_t n = 32;
  Rng rng(1);
  Tensor unary = random_tensor({n, t}, rng);
  Tensor trans = random_tensor({t, t}, rng);
  for (auto _ : state) {
    double z = seqal::crf::log_partition(unary.v.data(), trans.v.data(), n, t);
    benchmark::DoNotOptimize(z);
  }
  state.SetItemsProcessed(state.iterations() * n * t * t);
}
BENCHMARK(BM_CrfLogPartition)->Arg(5)->Arg(9)->Arg(17)->Arg(33)->Arg(65);

void BM_CrfViterbi(benchmark::State& state) {
  int64_t t = state.range(0);
  const int64_t n = 32;
  Rng rng(1);
  Tensor unary = random_tensor({n, t}, rng);
  Tensor trans = random_tensor({t, t}, rng);
  for (auto _ : state) {
    auto path = seqal::crf::viterbi(unary.v.data(), trans.v.data(), n, t);
    benchmark::DoNotOptimize(path.tags.data());
  }
  state.SetItemsProcessed(state.iterations() * n * t * t);
}
BENCHMARK(BM_CrfViterbi)->Arg(5)->Arg(9)->Arg(17)->Arg(33)->Arg(65);

seqal::SubmodInstance make_instance(int64_t n_candidates, Rng& rng) {
  seqal::SubmodInstance inst;
  inst.kernel = seqal::SimilarityKernel::kCosine;
  inst.budget = 8 * n_candidates;  // roughly half the items fit
  for (int64_t i = 0; i < n_candidates; ++i) {
    inst.candidate_ids.push_back(i);
    inst.all_unlabeled_ids.push_back(i);
    inst.costs[i] = 4 + static_cast<int64_t>(rng.uniform_int(24));
    std::vector<Real> e(16);
    for (Real& x : e) x = static_cast<Real>(rng.uniform(-1.0, 1.0));
    inst.embeddings[i] = std::move(e);
  }
  inst.validate();
  return inst;
}

void BM_StreamSubmodMax(benchmark::State& state) {
  Rng rng(7);
  seqal::SubmodInstance inst = make_instance(state.range(0), rng);
  for (auto _ : state) {
    auto res = seqal::stream_submod_max(inst, 0.1);
    benchmark::DoNotOptimize(res.value);
  }
}
BENCHMARK(BM_StreamSubmodMax)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
