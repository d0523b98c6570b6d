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
#include <map>
#include <string>
#include <vector>

#include "seqal/corpus.hpp"

namespace seqal {

// One sentence template: literal tokens plus $TYPE slots. The slot type ANY
// is reserved; the generator fills it with a uniformly drawn entity type, so
// the surrounding context carries no type information.
struct SynthTemplate {
  struct Token {
    bool is_slot = false;
    std::string text;  // literal token, or the entity type when is_slot
  };
  std::vector<Token> tokens;
};

// Parses "the $ORG board met in $LOC" style template strings.
SynthTemplate parse_template(const std::string& text);

struct SynthGenre {
  std::string name;
  std::vector<SynthTemplate> templates;
};

// Generator description. Template and gazetteer draws are Zipf-skewed so a
// small head dominates and a long tail carries the rest, which is what makes
// selective annotation pay off over uniform sampling.
struct SynthSpec {
  std::vector<SynthGenre> genres;  // chosen uniformly per sentence
  // type -> surface forms, each a token sequence
  std::map<std::string, std::vector<std::vector<std::string>>> gazetteers;
  double template_zipf = 1.2;
  double entity_zipf = 1.1;
  TagScheme scheme = TagScheme::kBioes;
};

// Two genres ("news", "chat") with disjoint context vocabulary and four
// entity types (PER, LOC, ORG, DATE). Place and company names are built from
// one shared syllable inventory split disjointly between the two types, and a
// share of templates use the ANY slot, so many tags can only be resolved by
// having seen the specific surface labeled.
SynthSpec default_synth_spec();

// A spec with n_types entity types for decoder-cost studies; every type has
// its own small gazetteer and the templates carry one or two slots.
SynthSpec scaled_type_spec(int n_types);

Corpus synthesize_corpus(const SynthSpec& spec, int64_t n_sentences,
                         uint64_t seed);

}  // namespace seqal
