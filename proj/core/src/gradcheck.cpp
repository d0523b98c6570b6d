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

#include "seqal/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <vector>

namespace seqal {

GradCheckResult finite_diff_check(Tape& tape, Var loss, double eps,
                                  int64_t max_coords_per_param, Rng* pick_rng) {
  if (eps <= 0) throw ParamError("finite_diff_check: eps must be positive");
  if (max_coords_per_param >= 0 && !pick_rng) {
    throw ParamError("finite_diff_check: coordinate sampling needs pick_rng");
  }

  // A parameter may appear as several leaves; analytic gradients accumulate in
  // Parameter::grad, so zero each distinct parameter once and snapshot after
  // one backward pass.
  std::vector<Parameter*> distinct;
  for (const auto& [p, v] : tape.leaves()) {
    if (std::find(distinct.begin(), distinct.end(), p) == distinct.end()) {
      distinct.push_back(p);
    }
  }
  for (Parameter* p : distinct) p->grad.fill(Real(0));
  tape.backward(loss);

  std::unordered_map<Parameter*, Tensor> analytic;
  for (Parameter* p : distinct) analytic[p] = p->grad;

  GradCheckResult res;
  for (Parameter* p : distinct) {
    const int64_t n = p->value.numel();
    std::vector<int64_t> coords(static_cast<size_t>(n));
    std::iota(coords.begin(), coords.end(), 0);
    if (max_coords_per_param >= 0 && n > max_coords_per_param) {
      pick_rng->shuffle(coords);
      coords.resize(static_cast<size_t>(max_coords_per_param));
    }

    // Every leaf bound to this parameter must see the perturbation.
    std::vector<Var> bound;
    for (const auto& [lp, v] : tape.leaves()) {
      if (lp == p) bound.push_back(v);
    }

    for (int64_t c : coords) {
      const Real orig = p->value.at(c);
      auto eval_at = [&](double x) {
        for (Var v : bound) tape.mutable_value(v).at(c) = static_cast<Real>(x);
        tape.replay_forward();
        return static_cast<double>(tape.value(loss).v[0]);
      };
      const double fp = eval_at(static_cast<double>(orig) + eps);
      const double fm = eval_at(static_cast<double>(orig) - eps);
      for (Var v : bound) tape.mutable_value(v).at(c) = orig;
      const double numeric = (fp - fm) / (2 * eps);
      const double exact = static_cast<double>(analytic[p].at(c));
      const double abs_err = std::fabs(exact - numeric);
      const double rel = abs_err / std::max({std::fabs(exact), std::fabs(numeric), 1e-3});
      res.max_abs_err = std::max(res.max_abs_err, abs_err);
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_param = p->name;
        res.worst_coord = c;
      }
      ++res.coords_checked;
    }
  }
  // Restore recorded values for any later use of the tape.
  tape.replay_forward();
  return res;
}

}  // namespace seqal
