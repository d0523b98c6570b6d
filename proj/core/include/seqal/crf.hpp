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
#include <vector>

#include "seqal/tensor.hpp"

// Value-level linear-chain CRF routines over a sequence of n positions and t
// tags. unary is row-major [n x t]; trans[yp * t + yn] scores the transition
// yp -> yn. All accumulation is in double.

namespace seqal::crf {

// log sum over all t^n paths of exp(path score).
double log_partition(const Real* unary, const Real* trans, int64_t n, int64_t t);

// sum(unary[i, y_i]) + sum(trans[y_{i-1}, y_i])
double path_score(const Real* unary, const Real* trans, const int32_t* tags,
                  int64_t n, int64_t t);

struct ViterbiPath {
  std::vector<int32_t> tags;
  double score = 0;  // unnormalized path score
};

// Highest-scoring path; ties resolve deterministically (argmax scans keep
// the lowest tag id).
ViterbiPath viterbi(const Real* unary, const Real* trans, int64_t n, int64_t t);

// Suffix log sums beta[i*t + y] = log sum over completions from (i, y),
// excluding position i's own unary. beta[(n-1)*t + y] = 0.
std::vector<double> beta_table(const Real* unary, const Real* trans, int64_t n,
                               int64_t t);

}  // namespace seqal::crf
