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

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "doctest.h"
#include "seqal/corpus.hpp"
#include "seqal/errors.hpp"
#include "seqal/synth.hpp"

using namespace seqal;

TEST_CASE("parse_template splits literals and slots") {
  SynthTemplate t = parse_template("the $ORG board met in $LOC");
  REQUIRE(t.tokens.size() == 6);
  CHECK_FALSE(t.tokens[0].is_slot);
  CHECK(t.tokens[0].text == "the");
  CHECK(t.tokens[1].is_slot);
  CHECK(t.tokens[1].text == "ORG");
  CHECK(t.tokens[5].is_slot);
  CHECK(t.tokens[5].text == "LOC");
  CHECK_THROWS_AS(parse_template(""), ParamError);
  CHECK_THROWS_AS(parse_template("   "), ParamError);
}

TEST_CASE("synthesize_corpus is deterministic in the seed") {
  SynthSpec spec = default_synth_spec();
  Corpus a = synthesize_corpus(spec, 200, 7);
  Corpus b = synthesize_corpus(spec, 200, 7);
  Corpus c = synthesize_corpus(spec, 200, 8);
  CHECK(render_conll(a) == render_conll(b));
  CHECK(render_conll(a) != render_conll(c));
}

TEST_CASE("the opening sentences cover every entity type") {
  SynthSpec spec = default_synth_spec();
  Corpus small = synthesize_corpus(spec, 4, 123);
  std::set<std::string> seen;
  for (const Sentence& s : small.sentences) {
    for (const Span& sp : extract_spans(s.tags, small.scheme, true, s.id)) {
      seen.insert(sp.type);
    }
  }
  CHECK(seen == std::set<std::string>{"DATE", "LOC", "ORG", "PER"});
}

TEST_CASE("every sentence carries a genre and valid tags") {
  Corpus corpus = synthesize_corpus(default_synth_spec(), 300, 5);
  CHECK(corpus.scheme == TagScheme::kBioes);
  for (const Sentence& s : corpus.sentences) {
    REQUIRE(s.genre.has_value());
    CHECK((*s.genre == "news" || *s.genre == "chat"));
    CHECK(s.tags.size() == s.tokens.size());
    CHECK_NOTHROW(extract_spans(s.tags, TagScheme::kBioes, true, s.id));
  }
  std::set<std::string> genres;
  for (const Sentence& s : corpus.sentences) genres.insert(*s.genre);
  CHECK(genres.size() == 2);
}

TEST_CASE("surface draws are head-skewed") {
  Corpus corpus = synthesize_corpus(default_synth_spec(), 3000, 17);
  std::map<std::string, int64_t> counts;
  int64_t total = 0;
  for (const Sentence& s : corpus.sentences) {
    for (const Span& sp : extract_spans(s.tags, corpus.scheme, true, s.id)) {
      if (sp.type != "LOC") continue;
      counts[s.tokens[static_cast<size_t>(sp.start)]] += 1;
      total += 1;
    }
  }
  REQUIRE(counts.size() > 20);
  int64_t head = 0;
  for (const auto& [w, c] : counts) head = std::max(head, c);
  const double mean =
      static_cast<double>(total) / static_cast<double>(counts.size());
  CHECK(static_cast<double>(head) > 4.0 * mean);
}

TEST_CASE("place and company surfaces never overlap") {
  SynthSpec spec = default_synth_spec();
  std::set<std::string> loc, org;
  for (const auto& v : spec.gazetteers.at("LOC")) loc.insert(v[0]);
  for (const auto& v : spec.gazetteers.at("ORG")) org.insert(v[0]);
  CHECK(loc.size() == 200);
  CHECK(org.size() == 200);
  std::set<std::string> both;
  std::set_intersection(loc.begin(), loc.end(), org.begin(), org.end(),
                        std::inserter(both, both.begin()));
  CHECK(both.empty());
}

TEST_CASE("each genre keeps exclusive context words") {
  Corpus corpus = synthesize_corpus(default_synth_spec(), 500, 3);
  std::map<std::string, std::set<std::string>> ctx;
  for (const Sentence& s : corpus.sentences) {
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      if (s.tags[i] == "O") ctx[*s.genre].insert(s.tokens[i]);
    }
  }
  std::set<std::string> only_news, only_chat;
  std::set_difference(ctx["news"].begin(), ctx["news"].end(),
                      ctx["chat"].begin(), ctx["chat"].end(),
                      std::inserter(only_news, only_news.begin()));
  std::set_difference(ctx["chat"].begin(), ctx["chat"].end(),
                      ctx["news"].begin(), ctx["news"].end(),
                      std::inserter(only_chat, only_chat.begin()));
  CHECK(only_news.size() >= 10);
  CHECK(only_chat.size() >= 10);
}

TEST_CASE("an ANY slot reaches every gazetteer type") {
  SynthSpec spec;
  spec.scheme = TagScheme::kBioes;
  spec.gazetteers["A"] = {{"Alpha"}};
  spec.gazetteers["B"] = {{"Beta"}};
  SynthGenre g;
  g.name = "only";
  g.templates = {parse_template("spotted $ANY downtown")};
  spec.genres = {g};
  Corpus corpus = synthesize_corpus(spec, 50, 9);
  CHECK(corpus.entity_types == std::set<std::string>{"A", "B"});
  std::set<std::string> first_two;
  for (int i = 0; i < 2; ++i) {
    for (const Span& sp : extract_spans(corpus.sentences[static_cast<size_t>(i)].tags,
                                        corpus.scheme, true, i)) {
      first_two.insert(sp.type);
    }
  }
  CHECK(first_two.size() == 2);
}

TEST_CASE("generator input errors") {
  SynthSpec spec = default_synth_spec();
  CHECK_THROWS_AS(synthesize_corpus(spec, -1, 0), ParamError);

  SynthSpec empty;
  CHECK_THROWS_AS(synthesize_corpus(empty, 5, 0), ParamError);

  SynthSpec missing;
  SynthGenre g;
  g.name = "g";
  g.templates = {parse_template("met $GHOST today")};
  missing.genres = {g};
  CHECK_THROWS_AS(synthesize_corpus(missing, 5, 0), ParamError);

  SynthSpec reserved = default_synth_spec();
  reserved.gazetteers["ANY"] = {{"X"}};
  CHECK_THROWS_AS(synthesize_corpus(reserved, 5, 0), ParamError);
}

TEST_CASE("scaled_type_spec scales the tag inventory") {
  for (int t : {1, 5, 20}) {
    SynthSpec spec = scaled_type_spec(t);
    CHECK(static_cast<int>(spec.gazetteers.size()) == t);
    Corpus corpus = synthesize_corpus(spec, 200, 4);
    CHECK(static_cast<int>(corpus.entity_types.size()) == t);
  }
  CHECK_THROWS_AS(scaled_type_spec(0), ParamError);
  CHECK_THROWS_AS(scaled_type_spec(100), ParamError);
}
