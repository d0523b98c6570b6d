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

#include "seqal/crf.hpp"

#include <algorithm>
#include <cmath>

#include "seqal/errors.hpp"

namespace seqal::crf {

namespace {

double lse(const std::vector<double>& x) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  double s = 0;
  for (double v : x) s += std::exp(v - mx);
  return mx + std::log(s);
}

void check_dims(int64_t n, int64_t t, const char* where) {
  if (n < 1 || t < 1) throw ContractError(std::string(where) + ": need n >= 1, t >= 1");
}

}  // namespace

double log_partition(const Real* unary, const Real* trans, int64_t n, int64_t t) {
  check_dims(n, t, "crf::log_partition");
  std::vector<double> alpha(static_cast<size_t>(t));
  for (int64_t y = 0; y < t; ++y) alpha[static_cast<size_t>(y)] = unary[y];
  std::vector<double> tmp(static_cast<size_t>(t)), next(static_cast<size_t>(t));
  for (int64_t i = 1; i < n; ++i) {
    for (int64_t yn = 0; yn < t; ++yn) {
      for (int64_t yp = 0; yp < t; ++yp) {
        tmp[static_cast<size_t>(yp)] =
            alpha[static_cast<size_t>(yp)] + static_cast<double>(trans[yp * t + yn]);
      }
      next[static_cast<size_t>(yn)] = static_cast<double>(unary[i * t + yn]) + lse(tmp);
    }
    alpha = next;
  }
  return lse(alpha);
}

double path_score(const Real* unary, const Real* trans, const int32_t* tags,
                  int64_t n, int64_t t) {
  check_dims(n, t, "crf::path_score");
  double s = 0;
  for (int64_t i = 0; i < n; ++i) {
    const int32_t y = tags[i];
    if (y < 0 || y >= t) throw ContractError("crf::path_score: tag id out of range");
    s += static_cast<double>(unary[i * t + y]);
    if (i > 0) s += static_cast<double>(trans[tags[i - 1] * t + y]);
  }
  return s;
}

ViterbiPath viterbi(const Real* unary, const Real* trans, int64_t n, int64_t t) {
  check_dims(n, t, "crf::viterbi");
  std::vector<double> best(static_cast<size_t>(t));
  for (int64_t y = 0; y < t; ++y) best[static_cast<size_t>(y)] = unary[y];
  std::vector<int32_t> back(static_cast<size_t>(n * t), 0);
  std::vector<double> next(static_cast<size_t>(t));
  for (int64_t i = 1; i < n; ++i) {
    for (int64_t yn = 0; yn < t; ++yn) {
      double bv = best[0] + static_cast<double>(trans[yn]);
      int32_t bp = 0;
      for (int64_t yp = 1; yp < t; ++yp) {
        const double v = best[static_cast<size_t>(yp)] +
                         static_cast<double>(trans[yp * t + yn]);
        if (v > bv) {
          bv = v;
          bp = static_cast<int32_t>(yp);
        }
      }
      next[static_cast<size_t>(yn)] = bv + static_cast<double>(unary[i * t + yn]);
      back[static_cast<size_t>(i * t + yn)] = bp;
    }
    best = next;
  }
  ViterbiPath p;
  int32_t last = 0;
  for (int64_t y = 1; y < t; ++y) {
    if (best[static_cast<size_t>(y)] > best[static_cast<size_t>(last)]) {
      last = static_cast<int32_t>(y);
    }
  }
  p.score = best[static_cast<size_t>(last)];
  p.tags.assign(static_cast<size_t>(n), 0);
  p.tags[static_cast<size_t>(n - 1)] = last;
  for (int64_t i = n - 1; i > 0; --i) {
    p.tags[static_cast<size_t>(i - 1)] =
        back[static_cast<size_t>(i * t + p.tags[static_cast<size_t>(i)])];
  }
  return p;
}

std::vector<double> beta_table(const Real* unary, const Real* trans, int64_t n,
                               int64_t t) {
  check_dims(n, t, "crf::beta_table");
  std::vector<double> beta(static_cast<size_t>(n * t), 0.0);
  std::vector<double> tmp(static_cast<size_t>(t));
  for (int64_t i = n - 2; i >= 0; --i) {
    for (int64_t y = 0; y < t; ++y) {
      for (int64_t yn = 0; yn < t; ++yn) {
        tmp[static_cast<size_t>(yn)] = static_cast<double>(trans[y * t + yn]) +
                                       static_cast<double>(unary[(i + 1) * t + yn]) +
                                       beta[static_cast<size_t>((i + 1) * t + yn)];
      }
      beta[static_cast<size_t>(i * t + y)] = lse(tmp);
    }
  }
  return beta;
}

}  // namespace seqal::crf
