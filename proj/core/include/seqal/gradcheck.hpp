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

#include "seqal/tape.hpp"

namespace seqal {

struct GradCheckResult {
  double max_rel_err = 0;
  double max_abs_err = 0;
  std::string worst_param;
  int64_t worst_coord = -1;
  int64_t coords_checked = 0;
  bool pass(double rel_tol) const { return max_rel_err <= rel_tol; }
};

// Central-difference check of the tape's parameter gradients against replayed
// forward evaluations. Runs backward(loss) itself (parameter grads are zeroed
// first), then perturbs each checked leaf coordinate by +-eps and replays the
// forward pass. The comparison never touches the backward code path.
//
// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-3);
// the floor keeps finite-difference roundoff noise on near-zero coordinates
// from registering as relative error.
//
// max_coords_per_param limits checked coordinates per parameter (-1 = all);
// when limited, coordinates are sampled with pick_rng (required then).
GradCheckResult finite_diff_check(Tape& tape, Var loss, double eps = 1e-5,
                                  int64_t max_coords_per_param = -1,
                                  Rng* pick_rng = nullptr);

}  // namespace seqal
