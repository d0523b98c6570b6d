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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "seqal/errors.hpp"
#include "seqal/gradcheck.hpp"
#include "seqal/harness.hpp"
#include "seqal/submod.hpp"
#include "seqal/synth.hpp"

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw seqal::ParamError("cannot read file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// "-" writes to stdout.
void write_output(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw seqal::ParamError("cannot write file: " + path);
  out << content;
  if (!out) throw seqal::ParamError("write failed: " + path);
}

seqal::TagScheme parse_scheme(const std::string& s) {
  if (s == "bio") return seqal::TagScheme::kBio;
  if (s == "bioes") return seqal::TagScheme::kBioes;
  throw seqal::ParamError("unknown scheme: " + s + " (expected bio or bioes)");
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void apply_submod_json(seqal::SubmodParams& sp, const json& j) {
  for (const auto& [k, v] : j.items()) {
    if (k == "t") {
      sp.t = v.get<int64_t>();
    } else if (k == "eps") {
      sp.eps = v.get<double>();
    } else if (k == "kernel") {
      sp.kernel = seqal::parse_kernel(v.get<std::string>());
    } else if (k == "embedding") {
      sp.embedding = seqal::parse_embedding(v.get<std::string>());
    } else if (k == "weighted") {
      sp.weighted = v.get<bool>();
    } else {
      throw seqal::ParamError("unknown config key: submod." + k);
    }
  }
}

void apply_config_json(seqal::ExperimentConfig& cfg, const json& j) {
  for (const auto& [k, v] : j.items()) {
    if (k == "strategy") {
      cfg.strategy = seqal::parse_strategy(v.get<std::string>());
    } else if (k == "rounds") {
      cfg.rounds = v.get<int64_t>();
    } else if (k == "budget_per_round") {
      cfg.budget_per_round = v.get<int64_t>();
    } else if (k == "warm_start_fraction") {
      cfg.warm_start_fraction = v.get<double>();
    } else if (k == "passes_per_round") {
      cfg.passes_per_round = v.get<int64_t>();
    } else if (k == "train_word_floor") {
      cfg.train_word_floor = v.get<int64_t>();
    } else if (k == "seed") {
      cfg.seed = v.get<uint64_t>();
    } else if (k == "preset") {
      cfg.preset = v.get<std::string>();
    } else if (k == "decoder") {
      cfg.decoder = v.get<std::string>();
    } else if (k == "bald_passes") {
      cfg.bald_passes = v.get<int64_t>();
    } else if (k == "submod") {
      apply_submod_json(cfg.submod, v);
    } else if (k == "lr") {
      cfg.lr = v.get<double>();
    } else if (k == "batch_size") {
      cfg.batch_size = v.get<int64_t>();
    } else if (k == "clip_norm") {
      cfg.clip_norm = v.get<double>();
    } else if (k == "unk_threshold") {
      cfg.unk_threshold = v.get<int64_t>();
    } else if (k == "full_baseline_epochs") {
      cfg.full_baseline_epochs = v.get<int64_t>();
    } else if (k == "exclude_genre_warm_start") {
      if (v.is_null()) {
        cfg.exclude_genre_warm_start.reset();
      } else {
        cfg.exclude_genre_warm_start = v.get<std::string>();
      }
    } else {
      throw seqal::ParamError("unknown config key: " + k);
    }
  }
}

// Shared flags that mirror ExperimentConfig; unset options keep whatever the
// JSON config (or the default) says.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::string> strategy, preset, decoder, exclude_genre;
  std::optional<std::string> submod_kernel, submod_embedding;
  std::optional<int64_t> rounds, budget, passes, word_floor, bald_passes,
      submod_t;
  std::optional<int64_t> batch_size, unk_threshold, full_baseline_epochs;
  std::optional<double> warm_start, submod_eps, lr, clip_norm;
  std::optional<bool> submod_weighted;

  void add_to(CLI::App* sub) {
    sub->add_option("--config", config_path,
                    "JSON config mirroring the experiment fields");
    sub->add_option("--strategy", strategy,
                    "RAND, LC, MNLP, BALD, or SUBMOD");
    sub->add_option("--rounds", rounds, "Annotation rounds");
    sub->add_option("--budget", budget, "Words selected per round");
    sub->add_option("--warm-start", warm_start,
                    "Warm-start fraction of corpus words, in (0,1]");
    sub->add_option("--passes", passes, "Training epochs per round");
    sub->add_option("--train-word-floor", word_floor,
                    "Minimum word updates per training phase");
    sub->add_option("--preset", preset, "Model size: desk or paper");
    sub->add_option("--decoder", decoder, "lstm or crf");
    sub->add_option("--bald-passes", bald_passes, "Stochastic passes for BALD");
    sub->add_option("--submod-t", submod_t,
                    "Candidate restriction multiplier (t * budget words)");
    sub->add_option("--submod-eps", submod_eps, "Threshold spacing epsilon");
    sub->add_option("--submod-kernel", submod_kernel, "L1, L2, or COSINE");
    sub->add_option("--submod-embedding", submod_embedding,
                    "AVG_WORD_EMB or AVG_ENCODER");
    sub->add_option("--submod-weighted", submod_weighted,
                    "Weight utility by uncertainty (true/false)");
    sub->add_option("--lr", lr, "SGD learning rate");
    sub->add_option("--batch-size", batch_size, "Minibatch size");
    sub->add_option("--clip-norm", clip_norm, "Global gradient norm clip");
    sub->add_option("--unk-threshold", unk_threshold,
                    "Min word count kept in the vocabulary");
    sub->add_option("--full-baseline-epochs", full_baseline_epochs,
                    "Epochs for the full-data reference model");
    sub->add_option("--exclude-genre", exclude_genre,
                    "Genre barred from the warm start");
  }

  seqal::ExperimentConfig build(uint64_t seed) const {
    seqal::ExperimentConfig cfg;
    if (!config_path.empty())
      apply_config_json(cfg, json::parse(read_file(config_path)));
    if (strategy) cfg.strategy = seqal::parse_strategy(*strategy);
    if (rounds) cfg.rounds = *rounds;
    if (budget) cfg.budget_per_round = *budget;
    if (warm_start) cfg.warm_start_fraction = *warm_start;
    if (passes) cfg.passes_per_round = *passes;
    if (word_floor) cfg.train_word_floor = *word_floor;
    if (preset) cfg.preset = *preset;
    if (decoder) cfg.decoder = *decoder;
    if (bald_passes) cfg.bald_passes = *bald_passes;
    if (submod_t) cfg.submod.t = *submod_t;
    if (submod_eps) cfg.submod.eps = *submod_eps;
    if (submod_kernel) cfg.submod.kernel = seqal::parse_kernel(*submod_kernel);
    if (submod_embedding)
      cfg.submod.embedding = seqal::parse_embedding(*submod_embedding);
    if (submod_weighted) cfg.submod.weighted = *submod_weighted;
    if (lr) cfg.lr = *lr;
    if (batch_size) cfg.batch_size = *batch_size;
    if (clip_norm) cfg.clip_norm = *clip_norm;
    if (unk_threshold) cfg.unk_threshold = *unk_threshold;
    if (full_baseline_epochs) cfg.full_baseline_epochs = *full_baseline_epochs;
    if (exclude_genre) cfg.exclude_genre_warm_start = *exclude_genre;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
  }
};

seqal::Corpus load_corpus(const std::string& path, const std::string& scheme) {
  return seqal::parse_conll(read_file(path), parse_scheme(scheme));
}

std::string f1_report_csv(const seqal::F1Report& rep) {
  std::string out = "type,gold,predicted,correct,precision,recall,f1\n";
  auto row = [&](const std::string& type, int64_t g, int64_t p, int64_t c,
                 double pr, double rc, double f1) {
    out += type + "," + std::to_string(g) + "," + std::to_string(p) + "," +
           std::to_string(c) + "," + fmt_real(pr) + "," + fmt_real(rc) + "," +
           fmt_real(f1) + "\n";
  };
  row("ALL", rep.gold, rep.predicted, rep.correct, rep.precision, rep.recall,
      rep.f1);
  for (const auto& [type, prf] : rep.by_type)
    row(type, prf.gold, prf.predicted, prf.correct, prf.precision, prf.recall,
        prf.f1);
  return out;
}

int run_synth_data(uint64_t seed, int64_t sentences, std::optional<int> types,
                   const std::string& scheme, const std::string& out) {
  seqal::SynthSpec spec =
      types ? seqal::scaled_type_spec(*types) : seqal::default_synth_spec();
  seqal::Corpus corpus = seqal::synthesize_corpus(spec, sentences, seed);
  seqal::TagScheme target = parse_scheme(scheme);
  if (target != corpus.scheme) corpus = seqal::convert_scheme(corpus, target);
  write_output(out, seqal::render_conll(corpus));
  return 0;
}

int run_train(uint64_t seed, const ConfigFlags& flags, const std::string& data,
              const std::string& scheme, int64_t epochs,
              const std::string& embeddings_path, const std::string& model_out) {
  if (epochs < 1) throw seqal::ParamError("--epochs must be >= 1");
  seqal::ExperimentConfig cfg = flags.build(seed);
  seqal::Corpus corpus = load_corpus(data, scheme);
  seqal::Vocabulary vocab = seqal::build_vocabulary(corpus, cfg.unk_threshold);
  seqal::Rng rng(seed);
  seqal::EmbeddingTable table;
  const seqal::EmbeddingTable* pretrained = nullptr;
  if (!embeddings_path.empty()) {
    table = seqal::load_embeddings(read_file(embeddings_path));
    pretrained = &table;
  }
  seqal::TaggerModel model(cfg.tagger_config(), vocab, rng, pretrained);
  std::vector<const seqal::Sentence*> all;
  all.reserve(corpus.sentences.size());
  for (const seqal::Sentence& s : corpus.sentences) all.push_back(&s);
  seqal::TrainOptions topts;
  topts.lr = cfg.lr;
  topts.batch_size = cfg.batch_size;
  topts.clip_norm = cfg.clip_norm;
  std::string log = "epoch,loss,words\n";
  for (int64_t e = 0; e < epochs; ++e) {
    seqal::TrainStats st = seqal::train_epoch(model, all, topts, rng);
    log += std::to_string(e) + "," + fmt_real(st.mean_loss) + "," +
           std::to_string(st.words) + "\n";
  }
  seqal::save_model_file(model, model_out);
  std::cout << log;
  return 0;
}

int run_eval(const std::string& model_path, const std::string& data,
             const std::string& scheme, const std::string& out) {
  seqal::TaggerModel model = seqal::load_model_file(model_path);
  seqal::Corpus corpus = load_corpus(data, scheme);
  seqal::F1Report rep = seqal::evaluate_span_f1(model, corpus);
  write_output(out, f1_report_csv(rep));
  return 0;
}

int run_active(uint64_t seed, const ConfigFlags& flags, const std::string& data,
               const std::string& test, const std::string& scheme,
               const std::string& curve_out, const std::string& hist_out,
               const std::string& scores_out, const std::string& baseline_out) {
  seqal::ExperimentConfig cfg = flags.build(seed);
  seqal::Corpus corpus = load_corpus(data, scheme);
  seqal::Corpus test_corpus = load_corpus(test, scheme);
  seqal::ExperimentResult res =
      seqal::run_active_learning(cfg, corpus, test_corpus);
  write_output(curve_out, seqal::curve_csv(res.curve));
  if (!hist_out.empty()) {
    std::map<std::string, int64_t> merged;
    for (const seqal::SelectionResult& sel : res.selections)
      for (const auto& [genre, count] : seqal::genre_histogram(sel, corpus))
        merged[genre] += count;
    write_output(hist_out, seqal::histogram_csv(merged));
  }
  if (!scores_out.empty()) {
    // Scores whatever is left in the pool with the final model. Independent
    // of the run's rng, so the curve is identical with or without this flag.
    std::unordered_map<int64_t, const seqal::Sentence*> by_id;
    for (const seqal::Sentence& s : corpus.sentences) by_id[s.id] = &s;
    std::vector<const seqal::Sentence*> pool;
    pool.reserve(res.final_pool_ids.size());
    for (int64_t id : res.final_pool_ids) pool.push_back(by_id.at(id));
    seqal::Strategy st = cfg.strategy == seqal::Strategy::kSubmod
                             ? seqal::Strategy::kMnlp
                             : cfg.strategy;
    seqal::ScoreOptions so;
    so.bald_passes = cfg.bald_passes;
    so.batch_size = cfg.batch_size;
    so.seed = cfg.seed;
    std::vector<seqal::UncertaintyScore> scores =
        seqal::score_pool(*res.model, pool, st, so);
    write_output(scores_out, seqal::scores_csv(scores, corpus));
  }
  if (!baseline_out.empty()) {
    double f1 = seqal::full_data_f1(cfg, corpus, test_corpus);
    write_output(baseline_out, "full_data_f1\n" + fmt_real(f1) + "\n");
  }
  return 0;
}

int run_replicate(uint64_t seed, const ConfigFlags& flags,
                  const std::string& data, const std::string& test,
                  const std::string& scheme, int64_t n_seeds,
                  const std::string& out, const std::string& curves_dir) {
  seqal::ExperimentConfig cfg = flags.build(seed);
  seqal::Corpus corpus = load_corpus(data, scheme);
  seqal::Corpus test_corpus = load_corpus(test, scheme);
  seqal::ReplicateResult rep =
      seqal::replicate(cfg, corpus, test_corpus, n_seeds);
  write_output(out, seqal::replicate_csv(rep));
  if (!curves_dir.empty()) {
    std::filesystem::create_directories(curves_dir);
    for (size_t i = 0; i < rep.curves.size(); ++i) {
      std::string path = curves_dir + "/curve_seed" +
                         std::to_string(seed + i) + ".csv";
      write_output(path, seqal::curve_csv(rep.curves[i]));
    }
  }
  return 0;
}

int run_submod_check(const std::string& instance_path, double eps, bool brute,
                     const std::string& out) {
  seqal::SubmodInstance inst =
      seqal::restore_instance(read_file(instance_path));
  seqal::StreamResult sr = seqal::stream_submod_max(inst, eps);
  std::string csv = "metric,value\n";
  csv += "value," + fmt_real(sr.value) + "\n";
  csv += "cost," + std::to_string(sr.cost) + "\n";
  csv += "budget," + std::to_string(inst.budget) + "\n";
  csv += "m," + fmt_real(sr.m) + "\n";
  csv += "delta," + fmt_real(sr.delta) + "\n";
  csv += "thresholds," + std::to_string(sr.thresholds) + "\n";
  std::string ids;
  for (size_t i = 0; i < sr.chosen.size(); ++i) {
    if (i > 0) ids += ";";
    ids += std::to_string(sr.chosen[i]);
  }
  csv += "chosen," + ids + "\n";
  bool ok = true;
  if (brute) {
    seqal::BruteForceResult bf = seqal::brute_force_opt(inst);
    double bound = (1.0 - eps) * (1.0 - sr.delta) / 2.0 * bf.value;
    ok = sr.value + 1e-9 >= bound;
    csv += "opt," + fmt_real(bf.value) + "\n";
    csv += "bound," + fmt_real(bound) + "\n";
    csv += std::string("bound_ok,") + (ok ? "1" : "0") + "\n";
  }
  write_output(out, csv);
  if (!ok) {
    std::cerr << "error: streaming value fell below the guarantee bound\n";
    return 1;
  }
  return 0;
}

int run_grad_check(uint64_t seed, const std::string& decoder, double tolerance,
                   int64_t coords, const std::string& out) {
  if (!(tolerance > 0)) throw seqal::ParamError("--tolerance must be positive");
  if (coords < 1) throw seqal::ParamError("--coords must be >= 1");
  std::vector<seqal::DecoderKind> kinds;
  if (decoder == "lstm" || decoder == "both")
    kinds.push_back(seqal::DecoderKind::kLstm);
  if (decoder == "crf" || decoder == "both")
    kinds.push_back(seqal::DecoderKind::kCrf);
  if (kinds.empty())
    throw seqal::ParamError("--decoder must be lstm, crf, or both");

  seqal::Corpus corpus =
      seqal::synthesize_corpus(seqal::scaled_type_spec(2), 8, seed);
  seqal::Vocabulary vocab = seqal::build_vocabulary(corpus, 1);
  std::vector<const seqal::Sentence*> ptrs;
  for (const seqal::Sentence& s : corpus.sentences) ptrs.push_back(&s);
  seqal::FormattedBatch fb = seqal::format_batch(ptrs, vocab);

  std::string csv = "check,max_rel_err,coords,pass\n";
  bool all_pass = true;
  for (seqal::DecoderKind dk : kinds) {
    seqal::TaggerConfig cfg = seqal::TaggerConfig::desk();
    cfg.char_encoder.cnn.filters = 8;
    cfg.word_encoder.cnn.filters = 12;
    cfg.decoder_units = 10;
    cfg.char_emb_dim = 6;
    cfg.emb_dim = 8;
    cfg.decoder = dk;
    seqal::Rng rng(seed);
    seqal::TaggerModel model(cfg, vocab, rng);
    seqal::Tape tape;
    seqal::LossBuild lb =
        seqal::build_sequence_nll(tape, fb, model, seqal::RunMode::kTrain, rng);
    seqal::Rng pick(seed + 1);
    seqal::GradCheckResult res =
        seqal::finite_diff_check(tape, lb.loss, 1e-5, coords, &pick);
    bool pass = res.pass(tolerance);
    all_pass = all_pass && pass;
    std::string name =
        dk == seqal::DecoderKind::kLstm ? "loss_lstm_decoder" : "loss_crf_decoder";
    csv += name + "," + fmt_real(res.max_rel_err) + "," +
           std::to_string(res.coords_checked) + "," + (pass ? "1" : "0") + "\n";
  }
  write_output(out, csv);
  if (!all_pass) {
    std::cerr << "error: gradient check exceeded tolerance\n";
    return 1;
  }
  return 0;
}

int run_bench(uint64_t seed, const std::vector<int>& types, int64_t sentences,
              int64_t batch_size, int64_t epochs, const std::string& preset,
              const std::string& out) {
  seqal::TaggerConfig cfg;
  if (preset == "desk") {
    cfg = seqal::TaggerConfig::desk();
  } else if (preset == "paper") {
    cfg = seqal::TaggerConfig::paper();
  } else {
    throw seqal::ParamError("unknown preset: " + preset);
  }
  std::vector<seqal::BenchRow> rows =
      seqal::bench_decoder(types, cfg, sentences, batch_size, seed, epochs);
  write_output(out, seqal::bench_csv(rows));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-learning workbench for neural sequence tagging"};
  app.require_subcommand(1);
  // Uniform diagnostics: every failure path prints one "error: ..." line.
  app.failure_message([](const CLI::App*, const CLI::Error& e) {
    return "error: " + std::string(e.what()) + "\n";
  });

  // synth-data
  auto* synth = app.add_subcommand("synth-data", "Generate a synthetic corpus");
  uint64_t synth_seed = 0;
  int64_t synth_sentences = 5000;
  std::optional<int> synth_types;
  std::string synth_scheme = "bioes", synth_out = "-";
  synth->add_option("--seed", synth_seed, "Generator seed")->required();
  synth->add_option("--sentences", synth_sentences, "Sentence count");
  synth->add_option("--types", synth_types,
                    "Entity type count (scaling spec instead of the default)");
  synth->add_option("--scheme", synth_scheme, "Tag scheme: bioes or bio");
  synth->add_option("--out", synth_out, "Output path (- for stdout)");

  // train
  auto* train = app.add_subcommand("train", "Train a tagger on a corpus");
  uint64_t train_seed = 0;
  ConfigFlags train_flags;
  std::string train_data, train_scheme = "bioes", train_embeddings,
              train_model_out;
  int64_t train_epochs = 10;
  train->add_option("--seed", train_seed, "Training seed")->required();
  train->add_option("--data", train_data, "Training corpus (two-column text)")
      ->required();
  train->add_option("--scheme", train_scheme, "Tag scheme: bioes or bio");
  train->add_option("--epochs", train_epochs, "Training epochs");
  train->add_option("--embeddings", train_embeddings,
                    "Pretrained word embeddings (text format)");
  train->add_option("--model-out", train_model_out, "Model output path")
      ->required();
  train_flags.add_to(train);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a model with span F1");
  std::string eval_model, eval_data, eval_scheme = "bioes", eval_out = "-";
  eval->add_option("--model", eval_model, "Model path")->required();
  eval->add_option("--data", eval_data, "Evaluation corpus")->required();
  eval->add_option("--scheme", eval_scheme, "Tag scheme: bioes or bio");
  eval->add_option("--out", eval_out, "Report path (- for stdout)");

  // active-run
  auto* active = app.add_subcommand("active-run",
                                    "Run one active-learning simulation");
  uint64_t active_seed = 0;
  ConfigFlags active_flags;
  std::string active_data, active_test, active_scheme = "bioes";
  std::string active_curve = "-", active_hist, active_scores, active_baseline;
  active->add_option("--seed", active_seed, "Experiment seed")->required();
  active->add_option("--data", active_data, "Pool corpus")->required();
  active->add_option("--test", active_test, "Held-out test corpus")->required();
  active->add_option("--scheme", active_scheme, "Tag scheme: bioes or bio");
  active->add_option("--curve-out", active_curve,
                     "Learning-curve CSV path (- for stdout)");
  active->add_option("--histogram-out", active_hist,
                     "Genre histogram CSV over all selections");
  active->add_option("--scores-out", active_scores,
                     "Pool uncertainty scores CSV (final model, final pool)");
  active->add_option("--baseline-out", active_baseline,
                     "Full-data reference F1 CSV");
  active_flags.add_to(active);

  // replicate
  auto* repl = app.add_subcommand("replicate",
                                  "Aggregate a simulation over several seeds");
  uint64_t repl_seed = 0;
  ConfigFlags repl_flags;
  std::string repl_data, repl_test, repl_scheme = "bioes", repl_out = "-";
  std::string repl_curves_dir;
  int64_t repl_n = 8;
  repl->add_option("--seed", repl_seed, "Base seed")->required();
  repl->add_option("--data", repl_data, "Pool corpus")->required();
  repl->add_option("--test", repl_test, "Held-out test corpus")->required();
  repl->add_option("--scheme", repl_scheme, "Tag scheme: bioes or bio");
  repl->add_option("--seeds", repl_n, "Seed count");
  repl->add_option("--out", repl_out, "Aggregate CSV path (- for stdout)");
  repl->add_option("--curves-dir", repl_curves_dir,
                   "Directory for per-seed curve CSVs");
  repl_flags.add_to(repl);

  // submod-check
  auto* subck = app.add_subcommand(
      "submod-check", "Run the streaming selector on a dumped instance");
  std::string subck_instance, subck_out = "-";
  double subck_eps = 0.1;
  bool subck_brute = false;
  subck->add_option("--instance", subck_instance, "Instance dump CSV")
      ->required();
  subck->add_option("--eps", subck_eps, "Threshold spacing epsilon");
  subck->add_flag("--brute", subck_brute,
                  "Compare against the exhaustive optimum (<= 20 candidates)");
  subck->add_option("--out", subck_out, "Metrics CSV path (- for stdout)");

  // grad-check
  auto* gradck = app.add_subcommand(
      "grad-check", "Finite-difference check of training gradients");
  uint64_t gradck_seed = 0;
  std::string gradck_decoder = "both", gradck_out = "-";
  double gradck_tol = 1e-4;
  int64_t gradck_coords = 40;
  gradck->add_option("--seed", gradck_seed, "Seed for model and data")
      ->required();
  gradck->add_option("--decoder", gradck_decoder, "lstm, crf, or both");
  gradck->add_option("--tolerance", gradck_tol, "Max relative error");
  gradck->add_option("--coords", gradck_coords,
                     "Coordinates checked per parameter");
  gradck->add_option("--out", gradck_out, "Results CSV path (- for stdout)");

  // bench-decoder
  auto* bench = app.add_subcommand(
      "bench-decoder", "Time training epochs per decoder and tag count");
  uint64_t bench_seed = 0;
  std::vector<int> bench_types{5, 10, 20};
  int64_t bench_sentences = 400, bench_batch = 32, bench_epochs = 3;
  std::string bench_preset = "desk", bench_out = "-";
  bench->add_option("--seed", bench_seed, "Corpus and init seed")->required();
  bench->add_option("--types", bench_types, "Entity type counts")
      ->delimiter(',');
  bench->add_option("--sentences", bench_sentences, "Sentences per corpus");
  bench->add_option("--batch-size", bench_batch, "Minibatch size");
  bench->add_option("--epochs", bench_epochs, "Timed epochs (median kept)");
  bench->add_option("--preset", bench_preset, "Model size: desk or paper");
  bench->add_option("--out", bench_out, "Benchmark CSV path (- for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return run_synth_data(synth_seed, synth_sentences, synth_types,
                            synth_scheme, synth_out);
    if (train->parsed())
      return run_train(train_seed, train_flags, train_data, train_scheme,
                       train_epochs, train_embeddings, train_model_out);
    if (eval->parsed())
      return run_eval(eval_model, eval_data, eval_scheme, eval_out);
    if (active->parsed())
      return run_active(active_seed, active_flags, active_data, active_test,
                        active_scheme, active_curve, active_hist, active_scores,
                        active_baseline);
    if (repl->parsed())
      return run_replicate(repl_seed, repl_flags, repl_data, repl_test,
                           repl_scheme, repl_n, repl_out, repl_curves_dir);
    if (subck->parsed())
      return run_submod_check(subck_instance, subck_eps, subck_brute,
                              subck_out);
    if (gradck->parsed())
      return run_grad_check(gradck_seed, gradck_decoder, gradck_tol,
                            gradck_coords, gradck_out);
    if (bench->parsed())
      return run_bench(bench_seed, bench_types, bench_sentences, bench_batch,
                       bench_epochs, bench_preset, bench_out);
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
