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

#include <cmath>
#include <cstdint>

#include "seqal/tensor.hpp"

// Small dense kernels used by both the autodiff tape and the decode-only
// paths. All matrices are row-major.

namespace seqal::nnmath {

// C[M x N] += A[M x K] * B[K x N]
inline void gemm_nn_accum(Real* c, const Real* a, const Real* b, int64_t m,
                          int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const Real* ai = a + i * k;
    Real* ci = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const Real av = ai[p];
      if (av == Real(0)) continue;
      const Real* bp = b + p * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C[M x N] += A[M x K] * B[N x K]^T
inline void gemm_nt_accum(Real* c, const Real* a, const Real* b, int64_t m,
                          int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const Real* ai = a + i * k;
    Real* ci = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const Real* bj = b + j * k;
      Real acc = 0;
      for (int64_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

// C[K x N] += A[M x K]^T * B[M x N]
inline void gemm_tn_accum(Real* c, const Real* a, const Real* b, int64_t m,
                          int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const Real* ai = a + i * k;
    const Real* bi = b + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const Real av = ai[p];
      if (av == Real(0)) continue;
      Real* cp = c + p * n;
      for (int64_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

inline double log_sum_exp(const Real* x, int64_t n) {
  double mx = static_cast<double>(x[0]);
  for (int64_t i = 1; i < n; ++i) mx = std::max(mx, static_cast<double>(x[i]));
  double s = 0;
  for (int64_t i = 0; i < n; ++i) s += std::exp(static_cast<double>(x[i]) - mx);
  return mx + std::log(s);
}

inline void log_softmax(const Real* x, int64_t n, double* out) {
  const double lse = log_sum_exp(x, n);
  for (int64_t i = 0; i < n; ++i) out[i] = static_cast<double>(x[i]) - lse;
}

inline Real sigmoid(Real x) { return Real(1) / (Real(1) + std::exp(-x)); }

// In-place LSTM gate activation. g holds the four pre-activation blocks
// [i | f | g | o] of width h each; on return g holds the activated gates and
// h_out/c_out the new state.
inline void lstm_activate(Real* g, const Real* c_prev, Real* h_out, Real* c_out,
                          int64_t h) {
  Real* gi = g;
  Real* gf = g + h;
  Real* gg = g + 2 * h;
  Real* go = g + 3 * h;
  for (int64_t j = 0; j < h; ++j) {
    gi[j] = sigmoid(gi[j]);
    gf[j] = sigmoid(gf[j]);
    gg[j] = std::tanh(gg[j]);
    go[j] = sigmoid(go[j]);
    const Real c = gf[j] * c_prev[j] + gi[j] * gg[j];
    c_out[j] = c;
    h_out[j] = go[j] * std::tanh(c);
  }
}

}  // namespace seqal::nnmath
