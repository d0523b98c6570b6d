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

#include "seqal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "seqal/errors.hpp"
#include "seqal/rng.hpp"

namespace seqal {

SynthTemplate parse_template(const std::string& text) {
  SynthTemplate t;
  std::istringstream os(text);
  std::string tok;
  while (os >> tok) {
    if (tok.size() > 1 && tok[0] == '$') {
      t.tokens.push_back({true, tok.substr(1)});
    } else {
      t.tokens.push_back({false, tok});
    }
  }
  if (t.tokens.empty()) throw ParamError("parse_template: empty template");
  return t;
}

namespace {

// Cumulative-weight sampler over ranks with p(i) proportional to (i+1)^-s.
class ZipfSampler {
 public:
  ZipfSampler(size_t n, double s) {
    if (n == 0) throw ParamError("ZipfSampler: empty support");
    cum_.resize(n);
    double total = 0;
    for (size_t i = 0; i < n; ++i) {
      total += std::pow(static_cast<double>(i + 1), -s);
      cum_[i] = total;
    }
  }

  size_t draw(Rng& rng) const {
    const double u = rng.uniform() * cum_.back();
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    const size_t i = static_cast<size_t>(it - cum_.begin());
    return std::min(i, cum_.size() - 1);
  }

 private:
  std::vector<double> cum_;
};

}  // namespace

Corpus synthesize_corpus(const SynthSpec& spec, int64_t n_sentences,
                         uint64_t seed) {
  if (n_sentences < 0) throw ParamError("synthesize_corpus: negative count");
  if (spec.genres.empty()) throw ParamError("synthesize_corpus: no genres");

  if (spec.gazetteers.count("ANY") != 0) {
    throw ParamError("synthesize_corpus: ANY is a reserved slot name");
  }
  bool any_used = false;
  std::vector<std::string> reachable;
  for (const SynthGenre& g : spec.genres) {
    if (g.templates.empty()) {
      throw ParamError("synthesize_corpus: genre " + g.name + " has no templates");
    }
    for (const SynthTemplate& t : g.templates) {
      for (const SynthTemplate::Token& tok : t.tokens) {
        if (!tok.is_slot) continue;
        if (tok.text == "ANY") {
          if (spec.gazetteers.empty()) {
            throw ParamError("synthesize_corpus: ANY slot with no gazetteers");
          }
          any_used = true;
          continue;
        }
        const auto it = spec.gazetteers.find(tok.text);
        if (it == spec.gazetteers.end() || it->second.empty()) {
          throw ParamError("synthesize_corpus: no gazetteer for type " + tok.text);
        }
        if (std::find(reachable.begin(), reachable.end(), tok.text) ==
            reachable.end()) {
          reachable.push_back(tok.text);
        }
      }
    }
  }
  std::vector<std::string> any_types;
  if (any_used) {
    for (const auto& [type, surfaces] : spec.gazetteers) {
      if (surfaces.empty()) {
        throw ParamError("synthesize_corpus: empty gazetteer for type " + type);
      }
      any_types.push_back(type);
      if (std::find(reachable.begin(), reachable.end(), type) ==
          reachable.end()) {
        reachable.push_back(type);
      }
    }
  }
  std::sort(reachable.begin(), reachable.end());

  std::vector<ZipfSampler> genre_samplers;
  genre_samplers.reserve(spec.genres.size());
  for (const SynthGenre& g : spec.genres) {
    genre_samplers.emplace_back(g.templates.size(), spec.template_zipf);
  }
  std::map<std::string, ZipfSampler> entity_samplers;
  for (const auto& [type, surfaces] : spec.gazetteers) {
    entity_samplers.emplace(type, ZipfSampler(surfaces.size(), spec.entity_zipf));
  }

  // First template (in genre then template order) mentioning a type; the
  // opening sentences cycle through these so every reachable type is present
  // in any corpus with at least one sentence per type.
  auto forced_choice = [&](const std::string& type) -> std::pair<size_t, size_t> {
    for (size_t gi = 0; gi < spec.genres.size(); ++gi) {
      const auto& ts = spec.genres[gi].templates;
      for (size_t ti = 0; ti < ts.size(); ++ti) {
        for (const SynthTemplate::Token& tok : ts[ti].tokens) {
          if (tok.is_slot && tok.text == type) return {gi, ti};
        }
      }
    }
    for (size_t gi = 0; gi < spec.genres.size(); ++gi) {
      const auto& ts = spec.genres[gi].templates;
      for (size_t ti = 0; ti < ts.size(); ++ti) {
        for (const SynthTemplate::Token& tok : ts[ti].tokens) {
          if (tok.is_slot && tok.text == "ANY") return {gi, ti};
        }
      }
    }
    throw ContractError("synthesize_corpus: unreachable type " + type);
  };

  Corpus corpus;
  corpus.scheme = spec.scheme;
  Rng rng(seed);
  for (int64_t sid = 0; sid < n_sentences; ++sid) {
    size_t gi, ti;
    std::string forced_type;
    if (sid < static_cast<int64_t>(reachable.size())) {
      forced_type = reachable[static_cast<size_t>(sid)];
      std::tie(gi, ti) = forced_choice(forced_type);
    } else {
      gi = static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(spec.genres.size())));
      ti = genre_samplers[gi].draw(rng);
    }
    const SynthGenre& genre = spec.genres[gi];
    const SynthTemplate& tmpl = genre.templates[ti];

    Sentence s;
    s.id = sid;
    s.genre = genre.name;
    std::vector<Span> spans;
    for (const SynthTemplate::Token& tok : tmpl.tokens) {
      if (!tok.is_slot) {
        s.tokens.push_back(tok.text);
        continue;
      }
      std::string type = tok.text;
      if (type == "ANY") {
        if (!forced_type.empty()) {
          type = forced_type;
        } else {
          const auto k = rng.uniform_int(static_cast<int64_t>(any_types.size()));
          type = any_types[static_cast<size_t>(k)];
        }
      }
      const auto& surfaces = spec.gazetteers.at(type);
      const size_t ei = entity_samplers.at(type).draw(rng);
      Span span;
      span.start = static_cast<int32_t>(s.tokens.size());
      for (const std::string& w : surfaces[ei]) s.tokens.push_back(w);
      span.end = static_cast<int32_t>(s.tokens.size());
      span.type = type;
      spans.push_back(span);
      corpus.entity_types.insert(type);
    }
    s.tags = spans_to_tags(spans, s.n_words(), spec.scheme);
    corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

namespace {

std::vector<SynthTemplate> parse_all(const std::vector<std::string>& texts) {
  std::vector<SynthTemplate> out;
  out.reserve(texts.size());
  for (const std::string& t : texts) out.push_back(parse_template(t));
  return out;
}

std::vector<std::vector<std::string>> cross_join(
    const std::vector<std::string>& firsts,
    const std::vector<std::string>& seconds) {
  std::vector<std::vector<std::string>> out;
  out.reserve(firsts.size() * seconds.size());
  for (const std::string& a : firsts) {
    for (const std::string& b : seconds) out.push_back({a, b});
  }
  return out;
}

}  // namespace

SynthSpec default_synth_spec() {
  SynthSpec spec;
  spec.scheme = TagScheme::kBioes;
  spec.entity_zipf = 1.2;

  const std::vector<std::string> per_first = {"Mira",  "Jonas", "Priya", "Tomas",
                                              "Ingrid", "Farid", "Lena",  "Oskar",
                                              "Nadia", "Ravi",  "Sofia", "Emil"};
  std::vector<std::string> per_last;
  for (const std::string stem :
       {"Lind", "Berg", "Holm", "Strand", "Dahl", "Falk", "Nor", "Ek"}) {
    for (const std::string suf : {"son", "sen", "berg", "mann", "qvist"}) {
      per_last.push_back(stem + suf);
    }
  }
  spec.gazetteers["PER"] = cross_join(per_first, per_last);

  // Place and company names share one onset/coda inventory and are split by
  // parity, so the two types have identical character statistics and only
  // surface identity separates them.
  const std::vector<std::string> onsets = {
      "Kar", "Vel", "Dor", "Mal",  "Tre", "Bran", "Sol",  "Fen", "Gor", "Lus",
      "Tav", "Rim", "Bel", "Nor", "Quil", "Hask", "Jun",  "Pell", "Vor", "Ost"};
  const std::vector<std::string> codas = {
      "vik",  "mora", "dun",  "beck", "hall", "ster", "ning", "dale", "holt",
      "mar",  "wick", "sund", "by",   "lund", "gate", "heim", "stad", "nes",
      "vall", "tuna"};
  std::vector<std::vector<std::string>> loc, org;
  for (size_t i = 0; i < onsets.size(); ++i) {
    for (size_t j = 0; j < codas.size(); ++j) {
      ((i + j) % 2 == 0 ? loc : org).push_back({onsets[i] + codas[j]});
    }
  }
  spec.gazetteers["LOC"] = loc;
  spec.gazetteers["ORG"] = org;

  for (const std::string m :
       {"January", "February", "March", "April", "May", "June", "July",
        "August", "September", "October", "November", "December"}) {
    spec.gazetteers["DATE"].push_back({m});
  }

  SynthGenre news;
  news.name = "news";
  news.templates = parse_all({
      "$ANY dominated the headlines again",
      "the latest report focused on $ANY",
      "analysts kept watching $ANY closely",
      "$ANY was mentioned in the briefing",
      "the $ORG board met in $LOC",
      "$PER joined $ORG as analyst",
      "officials in $LOC approved the budget",
      "$PER spoke with reporters in $LOC",
      "the council will convene on $DATE",
      "$ORG firmly denied the merger report",
      "the committee published annual findings",
      "trading volume stayed thin again",
  });

  SynthGenre chat;
  chat.name = "chat";
  chat.templates = parse_all({
      "$ANY is all over my feed",
      "cant stop thinking about $ANY lol",
      "so whats the deal about $ANY",
      "$ANY keeps popping up lately",
      "omg $PER just moved to $LOC",
      "anyone going to $LOC this weekend",
      "$ORG totally botched my order lol",
      "party at $PER house $DATE",
      "$DATE is gonna be wild",
      "saw $PER at $LOC yesterday",
      "brb heading home pretty soon",
      "ugh monday already hit me",
  });

  spec.genres = {news, chat};
  return spec;
}

SynthSpec scaled_type_spec(int n_types) {
  if (n_types < 1 || n_types > 99) {
    throw ParamError("scaled_type_spec: n_types must be in [1, 99]");
  }
  SynthSpec spec;
  spec.scheme = TagScheme::kBioes;

  std::vector<std::string> names;
  for (int k = 0; k < n_types; ++k) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "E%02d", k);
    names.emplace_back(buf);
    std::vector<std::vector<std::string>> surfaces;
    for (int j = 0; j < 10; ++j) {
      char sbuf[16];
      std::snprintf(sbuf, sizeof sbuf, "e%02dx%d", k, j);
      surfaces.push_back({std::string(sbuf)});
    }
    spec.gazetteers[names.back()] = std::move(surfaces);
  }

  SynthGenre bench;
  bench.name = "bench";
  for (int k = 0; k < n_types; ++k) {
    bench.templates.push_back(
        parse_template("item $" + names[static_cast<size_t>(k)] + " noted in file"));
    bench.templates.push_back(parse_template(
        "pair $" + names[static_cast<size_t>(k)] + " with $" +
        names[static_cast<size_t>((k + 1) % n_types)] + " checked twice"));
  }
  spec.genres = {bench};
  return spec;
}

}  // namespace seqal
