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

#include "seqal/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "seqal/errors.hpp"
#include "seqal/params.hpp"
#include "seqal/synth.hpp"
#include "seqal/tape.hpp"

namespace seqal {

namespace {

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt_int(int64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

struct PoolSplit {
  std::vector<const Sentence*> labeled;
  std::vector<const Sentence*> pool;
};

// Shuffles the eligible sentences and takes a prefix until the word target
// (at least one sentence) is met. Excluded-genre sentences go straight to
// the pool. The pool keeps ascending id order.
PoolSplit warm_start_split(const Corpus& corpus, double fraction, Rng& rng,
                           const std::string* exclude_genre) {
  if (corpus.sentences.empty())
    throw ContractError("warm start needs a non-empty corpus");
  std::vector<const Sentence*> eligible;
  std::vector<const Sentence*> held;
  for (const Sentence& s : corpus.sentences) {
    if (exclude_genre != nullptr && s.genre.has_value() &&
        *s.genre == *exclude_genre) {
      held.push_back(&s);
    } else {
      eligible.push_back(&s);
    }
  }
  if (eligible.empty())
    throw ParamError("warm start: every sentence carries the excluded genre");
  rng.shuffle(eligible);
  int64_t target = static_cast<int64_t>(
      std::ceil(fraction * static_cast<double>(corpus.total_words())));
  if (target < 1) target = 1;
  PoolSplit split;
  int64_t got = 0;
  size_t i = 0;
  for (; i < eligible.size() && got < target; ++i) {
    split.labeled.push_back(eligible[i]);
    got += eligible[i]->n_words();
  }
  for (; i < eligible.size(); ++i) split.pool.push_back(eligible[i]);
  split.pool.insert(split.pool.end(), held.begin(), held.end());
  std::sort(split.pool.begin(), split.pool.end(),
            [](const Sentence* a, const Sentence* b) { return a->id < b->id; });
  return split;
}

SelectionResult select_round(const ExperimentConfig& cfg, TaggerModel& model,
                             const PoolSplit& split, Rng& rng) {
  if (cfg.strategy == Strategy::kSubmod) {
    SubmodSelectOptions so;
    so.t = cfg.submod.t;
    so.eps = cfg.submod.eps;
    so.embedding = cfg.submod.embedding;
    so.kernel = cfg.submod.kernel;
    so.weighted = cfg.submod.weighted;
    so.batch_size = cfg.batch_size;
    return submod_select(model, split.pool, split.labeled,
                         cfg.budget_per_round, rng, so);
  }
  ScoreOptions so;
  so.bald_passes = cfg.bald_passes;
  so.batch_size = cfg.batch_size;
  return select(cfg.strategy, split.pool, {}, model, cfg.budget_per_round, rng,
                so);
}

// Moves the chosen sentences from pool to labeled, preserving pick order.
void annotate(PoolSplit& split, const SelectionResult& sel) {
  std::unordered_set<int64_t> chosen(sel.chosen.begin(), sel.chosen.end());
  std::unordered_map<int64_t, const Sentence*> picked;
  std::vector<const Sentence*> keep;
  keep.reserve(split.pool.size());
  for (const Sentence* s : split.pool) {
    if (chosen.count(s->id) != 0) {
      picked[s->id] = s;
    } else {
      keep.push_back(s);
    }
  }
  if (picked.size() != sel.chosen.size())
    throw ContractError("selection named a sentence outside the pool");
  for (int64_t id : sel.chosen) split.labeled.push_back(picked.at(id));
  split.pool = std::move(keep);
}

void finalize_prf(int64_t gold, int64_t predicted, int64_t correct, double* p,
                  double* r, double* f1) {
  *p = predicted > 0 ? 100.0 * static_cast<double>(correct) /
                           static_cast<double>(predicted)
                     : 0.0;
  *r = gold > 0
           ? 100.0 * static_cast<double>(correct) / static_cast<double>(gold)
           : 0.0;
  *f1 = (*p + *r) > 0 ? 2.0 * *p * *r / (*p + *r) : 0.0;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double stddev_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean_of(xs);
  double s2 = 0;
  for (double x : xs) s2 += (x - m) * (x - m);
  return std::sqrt(s2 / static_cast<double>(xs.size()));
}

}  // namespace

void ExperimentConfig::validate() const {
  if (rounds < 0) throw ParamError("rounds must be >= 0");
  if (budget_per_round < 0) throw ParamError("budget_per_round must be >= 0");
  if (!(warm_start_fraction > 0.0) || warm_start_fraction > 1.0)
    throw ParamError("warm_start_fraction must be in (0, 1]");
  if (passes_per_round < 0) throw ParamError("passes_per_round must be >= 0");
  if (train_word_floor < 0) throw ParamError("train_word_floor must be >= 0");
  if (preset != "desk" && preset != "paper")
    throw ParamError("unknown preset: " + preset);
  if (decoder != "lstm" && decoder != "crf")
    throw ParamError("unknown decoder: " + decoder);
  if (bald_passes < 2) throw ParamError("bald_passes must be >= 2");
  if (submod.t < 1) throw ParamError("submod.t must be >= 1");
  if (!(submod.eps > 0.0)) throw ParamError("submod.eps must be positive");
  if (!(lr > 0.0)) throw ParamError("lr must be positive");
  if (batch_size < 1) throw ParamError("batch_size must be >= 1");
  if (!(clip_norm > 0.0)) throw ParamError("clip_norm must be positive");
  if (unk_threshold < 1) throw ParamError("unk_threshold must be >= 1");
  if (full_baseline_epochs < 1)
    throw ParamError("full_baseline_epochs must be >= 1");
}

TaggerConfig ExperimentConfig::tagger_config() const {
  TaggerConfig c;
  if (preset == "desk") {
    c = TaggerConfig::desk();
  } else if (preset == "paper") {
    c = TaggerConfig::paper();
  } else {
    throw ParamError("unknown preset: " + preset);
  }
  if (decoder == "lstm") {
    c.decoder = DecoderKind::kLstm;
  } else if (decoder == "crf") {
    c.decoder = DecoderKind::kCrf;
  } else {
    throw ParamError("unknown decoder: " + decoder);
  }
  return c;
}

double curve_auc(const LearningCurve& curve) {
  double area = 0;
  for (size_t i = 1; i < curve.points.size(); ++i) {
    const CurvePoint& a = curve.points[i - 1];
    const CurvePoint& b = curve.points[i];
    area += static_cast<double>(b.words - a.words) * (a.f1 + b.f1) / 2.0;
  }
  return area;
}

F1Report evaluate_span_f1(TaggerModel& model, const Corpus& corpus,
                          int64_t batch_size) {
  if (batch_size < 1) throw ParamError("batch_size must be >= 1");
  F1Report rep;
  for (const std::string& t : corpus.entity_types) rep.by_type[t];
  std::vector<const Sentence*> ptrs;
  std::unordered_map<int64_t, const Sentence*> by_id;
  ptrs.reserve(corpus.sentences.size());
  for (const Sentence& s : corpus.sentences) {
    ptrs.push_back(&s);
    by_id[s.id] = &s;
  }
  Rng rng(0);
  auto batches = make_batches(ptrs, batch_size, nullptr);
  for (const auto& group : batches) {
    FormattedBatch fb = format_batch(group, model.vocab);
    EncoderOutput enc = encode(fb, model, RunMode::kEval, rng);
    for (int64_t row = 0; row < fb.batch; ++row) {
      Decoding d = decode(enc, model, row);
      const Sentence& s = *by_id.at(fb.sentence_id[static_cast<size_t>(row)]);
      std::vector<std::string> pred_tags;
      pred_tags.reserve(d.tags.size());
      for (int32_t t : d.tags)
        pred_tags.push_back(model.vocab.id_to_tag[static_cast<size_t>(t)]);
      auto pred = extract_spans(pred_tags, corpus.scheme, false);
      auto gold = extract_spans(s.tags, corpus.scheme, true, s.id);
      std::set<Span> gold_set(gold.begin(), gold.end());
      rep.gold += static_cast<int64_t>(gold.size());
      rep.predicted += static_cast<int64_t>(pred.size());
      for (const Span& g : gold) rep.by_type[g.type].gold += 1;
      for (const Span& p : pred) {
        rep.by_type[p.type].predicted += 1;
        if (gold_set.count(p) != 0) {
          rep.correct += 1;
          rep.by_type[p.type].correct += 1;
        }
      }
    }
  }
  finalize_prf(rep.gold, rep.predicted, rep.correct, &rep.precision,
               &rep.recall, &rep.f1);
  for (auto& [type, prf] : rep.by_type)
    finalize_prf(prf.gold, prf.predicted, prf.correct, &prf.precision,
                 &prf.recall, &prf.f1);
  return rep;
}

ExperimentResult run_active_learning(const ExperimentConfig& cfg,
                                     const Corpus& corpus, const Corpus& test) {
  cfg.validate();
  if (corpus.sentences.empty())
    throw ContractError("active learning needs a non-empty training corpus");
  auto t0 = std::chrono::steady_clock::now();
  Vocabulary vocab = build_vocabulary(corpus, cfg.unk_threshold);
  Rng rng(cfg.seed);
  TaggerModel model(cfg.tagger_config(), vocab, rng);
  const std::string* exclude = cfg.exclude_genre_warm_start.has_value()
                                   ? &*cfg.exclude_genre_warm_start
                                   : nullptr;
  PoolSplit split =
      warm_start_split(corpus, cfg.warm_start_fraction, rng, exclude);
  TrainOptions topts;
  topts.lr = cfg.lr;
  topts.batch_size = cfg.batch_size;
  topts.clip_norm = cfg.clip_norm;

  ExperimentResult res;
  res.corpus_words = corpus.total_words();

  auto train_phase = [&] {
    int64_t labeled_words = 0;
    for (const Sentence* s : split.labeled) labeled_words += s->n_words();
    int64_t passes = cfg.passes_per_round;
    if (labeled_words > 0 && cfg.passes_per_round > 0) {
      const int64_t fill =
          (cfg.train_word_floor + labeled_words - 1) / labeled_words;
      passes = std::max(passes, fill);
    }
    for (int64_t p = 0; p < passes; ++p)
      train_epoch(model, split.labeled, topts, rng);
  };
  auto record = [&](int64_t round) {
    F1Report rep = evaluate_span_f1(model, test, cfg.batch_size);
    CurvePoint pt;
    pt.round = round;
    pt.words = 0;
    for (const Sentence* s : split.labeled) pt.words += s->n_words();
    pt.percent = res.corpus_words > 0 ? 100.0 * static_cast<double>(pt.words) /
                                            static_cast<double>(res.corpus_words)
                                      : 0.0;
    pt.f1 = rep.f1;
    pt.seconds = seconds_since(t0);
    res.curve.points.push_back(pt);
  };

  train_phase();
  record(0);
  for (int64_t r = 1; r <= cfg.rounds; ++r) {
    if (split.pool.empty()) break;
    SelectionResult sel = select_round(cfg, model, split, rng);
    if (sel.chosen.empty()) break;
    annotate(split, sel);
    res.selections.push_back(std::move(sel));
    train_phase();
    record(r);
  }
  for (const Sentence* s : split.pool) res.final_pool_ids.push_back(s->id);
  res.model.emplace(std::move(model));
  return res;
}

double full_data_f1(const ExperimentConfig& cfg, const Corpus& corpus,
                    const Corpus& test) {
  cfg.validate();
  if (corpus.sentences.empty())
    throw ContractError("baseline training needs a non-empty corpus");
  Vocabulary vocab = build_vocabulary(corpus, cfg.unk_threshold);
  Rng rng(cfg.seed);
  TaggerModel model(cfg.tagger_config(), vocab, rng);
  std::vector<const Sentence*> all;
  all.reserve(corpus.sentences.size());
  for (const Sentence& s : corpus.sentences) all.push_back(&s);
  TrainOptions topts;
  topts.lr = cfg.lr;
  topts.batch_size = cfg.batch_size;
  topts.clip_norm = cfg.clip_norm;
  for (int64_t e = 0; e < cfg.full_baseline_epochs; ++e)
    train_epoch(model, all, topts, rng);
  return evaluate_span_f1(model, test, cfg.batch_size).f1;
}

ReplicateResult replicate(const ExperimentConfig& cfg, const Corpus& corpus,
                          const Corpus& test, int64_t n_seeds) {
  if (n_seeds < 1) throw ParamError("n_seeds must be >= 1");
  ReplicateResult rr;
  size_t max_points = 0;
  for (int64_t i = 0; i < n_seeds; ++i) {
    ExperimentConfig c = cfg;
    c.seed = cfg.seed + static_cast<uint64_t>(i);
    rr.curves.push_back(run_active_learning(c, corpus, test).curve);
    max_points = std::max(max_points, rr.curves.back().points.size());
  }
  for (size_t k = 0; k < max_points; ++k) {
    std::vector<double> words, percents, f1s;
    int64_t round = static_cast<int64_t>(k);
    for (const LearningCurve& c : rr.curves) {
      if (k >= c.points.size()) continue;
      const CurvePoint& pt = c.points[k];
      round = pt.round;
      words.push_back(static_cast<double>(pt.words));
      percents.push_back(pt.percent);
      f1s.push_back(pt.f1);
    }
    ReplicateRow row;
    row.round = round;
    row.words_mean = mean_of(words);
    row.percent_mean = mean_of(percents);
    row.f1_mean = mean_of(f1s);
    row.f1_stddev = stddev_of(f1s);
    rr.aggregate.push_back(row);
  }
  return rr;
}

std::map<std::string, int64_t> genre_histogram(const SelectionResult& sel,
                                               const Corpus& corpus) {
  std::unordered_map<int64_t, const Sentence*> by_id;
  for (const Sentence& s : corpus.sentences) by_id[s.id] = &s;
  std::map<std::string, int64_t> hist;
  for (int64_t id : sel.chosen) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw ContractError("selection id not in corpus: " + std::to_string(id));
    const Sentence* s = it->second;
    hist[s->genre.has_value() ? *s->genre : "unknown"] += 1;
  }
  return hist;
}

GenreProbeResult genre_bias_probe(const ExperimentConfig& cfg,
                                  const Corpus& corpus,
                                  const std::string& excluded_genre) {
  cfg.validate();
  bool seen = false;
  for (const Sentence& s : corpus.sentences)
    if (s.genre.has_value() && *s.genre == excluded_genre) seen = true;
  if (!seen)
    throw ParamError("no sentence carries genre: " + excluded_genre);

  auto arm = [&](bool exclude, std::map<std::string, int64_t>* hist,
                 double* share) {
    Vocabulary vocab = build_vocabulary(corpus, cfg.unk_threshold);
    Rng rng(cfg.seed);
    TaggerModel model(cfg.tagger_config(), vocab, rng);
    PoolSplit split = warm_start_split(corpus, cfg.warm_start_fraction, rng,
                                       exclude ? &excluded_genre : nullptr);
    TrainOptions topts;
    topts.lr = cfg.lr;
    topts.batch_size = cfg.batch_size;
    topts.clip_norm = cfg.clip_norm;
    for (int64_t p = 0; p < cfg.passes_per_round; ++p)
      train_epoch(model, split.labeled, topts, rng);
    SelectionResult sel = select_round(cfg, model, split, rng);
    *hist = genre_histogram(sel, corpus);
    auto it = hist->find(excluded_genre);
    int64_t hits = it == hist->end() ? 0 : it->second;
    *share = sel.chosen.empty() ? 0.0
                                : static_cast<double>(hits) /
                                      static_cast<double>(sel.chosen.size());
  };

  GenreProbeResult out;
  arm(true, &out.biased, &out.biased_share);
  arm(false, &out.unbiased, &out.unbiased_share);
  return out;
}

std::vector<BenchRow> bench_decoder(const std::vector<int>& type_counts,
                                    const TaggerConfig& base_cfg,
                                    int64_t n_sentences, int64_t batch_size,
                                    uint64_t seed, int64_t timed_epochs) {
  base_cfg.validate();
  if (type_counts.empty()) throw ParamError("type_counts must be non-empty");
  if (n_sentences < 1) throw ParamError("n_sentences must be >= 1");
  if (batch_size < 1) throw ParamError("batch_size must be >= 1");
  if (timed_epochs < 3) throw ParamError("timed_epochs must be >= 3");

  std::vector<BenchRow> rows;
  for (int n_types : type_counts) {
    Corpus corpus = synthesize_corpus(scaled_type_spec(n_types), n_sentences,
                                      seed);
    Vocabulary vocab = build_vocabulary(corpus, 1);
    std::vector<const Sentence*> ptrs;
    ptrs.reserve(corpus.sentences.size());
    for (const Sentence& s : corpus.sentences) ptrs.push_back(&s);
    Rng order_rng(seed);
    auto groups = make_batches(ptrs, batch_size, &order_rng);
    std::vector<FormattedBatch> batches;
    batches.reserve(groups.size());
    for (const auto& g : groups) batches.push_back(format_batch(g, vocab));

    for (DecoderKind dk : {DecoderKind::kLstm, DecoderKind::kCrf}) {
      TaggerConfig cfg = base_cfg;
      cfg.decoder = dk;
      Rng rng(seed);
      TaggerModel model(cfg, vocab, rng);
      auto epoch = [&] {
        for (const FormattedBatch& fb : batches) {
          Tape tape;
          LossBuild lb =
              build_sequence_nll(tape, fb, model, RunMode::kTrain, rng);
          model.params.zero_grads();
          tape.backward(lb.loss);
          clip_global_grad_norm(model.params, 5.0);
          sgd_update(model.params, 0.3);
        }
      };
      epoch();  // warm-up, discarded
      std::vector<double> times;
      for (int64_t e = 0; e < timed_epochs; ++e) {
        auto t0 = std::chrono::steady_clock::now();
        epoch();
        times.push_back(seconds_since(t0));
      }
      std::sort(times.begin(), times.end());
      size_t n = times.size();
      double median = (n % 2 == 1) ? times[n / 2]
                                   : (times[n / 2 - 1] + times[n / 2]) / 2.0;
      BenchRow row;
      row.entity_types = n_types;
      row.output_tags = vocab.n_output_tags();
      row.decoder = dk == DecoderKind::kLstm ? "lstm" : "crf";
      row.sec_per_epoch = median;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string curve_csv(const LearningCurve& curve) {
  std::string out = "round,words,percent,f1,seconds\n";
  for (const CurvePoint& pt : curve.points) {
    out += fmt_int(pt.round) + "," + fmt_int(pt.words) + "," +
           fmt_real(pt.percent) + "," + fmt_real(pt.f1) + "," +
           fmt_real(pt.seconds) + "\n";
  }
  return out;
}

std::string replicate_csv(const ReplicateResult& rep) {
  std::string out = "round,words_mean,percent_mean,f1_mean,f1_stddev\n";
  for (const ReplicateRow& row : rep.aggregate) {
    out += fmt_int(row.round) + "," + fmt_real(row.words_mean) + "," +
           fmt_real(row.percent_mean) + "," + fmt_real(row.f1_mean) + "," +
           fmt_real(row.f1_stddev) + "\n";
  }
  return out;
}

std::string scores_csv(const std::vector<UncertaintyScore>& scores,
                       const Corpus& corpus) {
  std::unordered_map<int64_t, int64_t> words_by_id;
  for (const Sentence& s : corpus.sentences) words_by_id[s.id] = s.n_words();
  std::string out = "sentence_id,strategy,value,length\n";
  for (const UncertaintyScore& sc : scores) {
    auto it = words_by_id.find(sc.sentence_id);
    if (it == words_by_id.end())
      throw ContractError("scored id not in corpus: " +
                          std::to_string(sc.sentence_id));
    out += fmt_int(sc.sentence_id) + "," + strategy_name(sc.strategy) + "," +
           fmt_real(sc.value) + "," + fmt_int(it->second) + "\n";
  }
  return out;
}

std::string histogram_csv(const std::map<std::string, int64_t>& hist) {
  std::string out = "genre,count\n";
  for (const auto& [genre, count] : hist)
    out += genre + "," + fmt_int(count) + "\n";
  return out;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "entity_types,output_tags,decoder,sec_per_epoch\n";
  for (const BenchRow& row : rows) {
    out += fmt_int(row.entity_types) + "," + fmt_int(row.output_tags) + "," +
           row.decoder + "," + fmt_real(row.sec_per_epoch) + "\n";
  }
  return out;
}

}  // namespace seqal
