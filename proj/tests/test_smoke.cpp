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

#include "doctest.h"
#include "seqal/harness.hpp"
#include "seqal/synth.hpp"

TEST_CASE("synthetic corpus trains and evaluates end to end") {
  seqal::Corpus corpus =
      seqal::synthesize_corpus(seqal::scaled_type_spec(2), 40, 1);
  seqal::ExperimentConfig cfg;
  cfg.rounds = 1;
  cfg.budget_per_round = 40;
  cfg.warm_start_fraction = 0.2;
  cfg.passes_per_round = 1;
  cfg.seed = 3;
  seqal::Corpus test = seqal::synthesize_corpus(seqal::scaled_type_spec(2), 20, 2);
  seqal::ExperimentResult res = seqal::run_active_learning(cfg, corpus, test);
  CHECK(res.curve.points.size() >= 1);
  CHECK(res.model.has_value());
}
