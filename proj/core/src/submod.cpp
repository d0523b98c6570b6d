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

#include "seqal/submod.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_set>

namespace seqal {

std::string kernel_name(SimilarityKernel k) {
  switch (k) {
    case SimilarityKernel::kL1: return "L1";
    case SimilarityKernel::kL2: return "L2";
    case SimilarityKernel::kCosine: return "COSINE";
  }
  throw ParamError("kernel_name: bad kernel");
}

SimilarityKernel parse_kernel(const std::string& name) {
  if (name == "L1") return SimilarityKernel::kL1;
  if (name == "L2") return SimilarityKernel::kL2;
  if (name == "COSINE") return SimilarityKernel::kCosine;
  throw ParamError("unknown kernel " + name);
}

std::string embedding_name(SentenceEmbedding e) {
  switch (e) {
    case SentenceEmbedding::kAvgWordEmb: return "AVG_WORD_EMB";
    case SentenceEmbedding::kAvgEncoder: return "AVG_ENCODER";
  }
  throw ParamError("embedding_name: bad embedding");
}

SentenceEmbedding parse_embedding(const std::string& name) {
  if (name == "AVG_WORD_EMB") return SentenceEmbedding::kAvgWordEmb;
  if (name == "AVG_ENCODER") return SentenceEmbedding::kAvgEncoder;
  throw ParamError("unknown embedding " + name);
}

namespace {

bool sorted_unique(const std::vector<int64_t>& v) {
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i - 1] >= v[i]) return false;
  }
  return true;
}

std::vector<int64_t> scope_ids(const SubmodInstance& inst) {
  std::vector<int64_t> ids = inst.all_unlabeled_ids;
  ids.insert(ids.end(), inst.labeled_ids.begin(), inst.labeled_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace

void SubmodInstance::validate() const {
  if (budget < 0) throw ContractError("SubmodInstance: negative budget");
  if (!sorted_unique(candidate_ids) || !sorted_unique(all_unlabeled_ids)) {
    throw ContractError("SubmodInstance: id lists must be ascending and unique");
  }
  const std::unordered_set<int64_t> domain(all_unlabeled_ids.begin(),
                                           all_unlabeled_ids.end());
  for (int64_t id : candidate_ids) {
    if (id < 0) throw ContractError("SubmodInstance: candidate ids must be >= 0");
    if (!domain.count(id)) {
      throw ContractError("SubmodInstance: candidate outside the unlabeled domain");
    }
    const auto it = costs.find(id);
    if (it == costs.end() || it->second < 1) {
      throw ContractError("SubmodInstance: every candidate needs cost >= 1");
    }
  }
  for (int64_t id : labeled_ids) {
    if (domain.count(id)) {
      throw ContractError("SubmodInstance: labeled id inside the unlabeled domain");
    }
  }
  if (!weights.empty()) {
    for (int64_t id : all_unlabeled_ids) {
      const auto it = weights.find(id);
      if (it == weights.end() || it->second < 0) {
        throw ContractError("SubmodInstance: weights must cover the domain, >= 0");
      }
    }
  }
  if (explicit_w.empty()) {
    size_t dim = 0;
    for (int64_t id : scope_ids(*this)) {
      const auto it = embeddings.find(id);
      if (it == embeddings.end() || it->second.empty()) {
        throw ContractError("SubmodInstance: missing embedding for id " +
                            std::to_string(id));
      }
      if (dim == 0) dim = it->second.size();
      if (it->second.size() != dim) {
        throw ContractError("SubmodInstance: embedding dimension mismatch");
      }
    }
  }
}

namespace {

double vec_distance(const std::vector<Real>& a, const std::vector<Real>& b,
                    SimilarityKernel kernel) {
  double acc = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += kernel == SimilarityKernel::kL1 ? std::fabs(d) : d * d;
  }
  return kernel == SimilarityKernel::kL1 ? acc : std::sqrt(acc);
}

double vec_norm(const std::vector<Real>& a) {
  double acc = 0;
  for (Real x : a) acc += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(acc);
}

double vec_dot(const std::vector<Real>& a, const std::vector<Real>& b) {
  double acc = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

}  // namespace

SimilarityTable::SimilarityTable(const SubmodInstance& inst) : inst_(&inst) {
  if (!inst.explicit_w.empty()) return;
  const std::vector<int64_t> ids = scope_ids(inst);
  if (inst.kernel == SimilarityKernel::kCosine) {
    for (int64_t id : ids) {
      if (vec_norm(inst.embeddings.at(id)) == 0) {
        throw ParamError("SimilarityTable: zero vector under the cosine kernel");
      }
    }
    return;
  }
  for (size_t i = 0; i < ids.size(); ++i) {
    const auto& a = inst.embeddings.at(ids[i]);
    for (size_t j = i + 1; j < ids.size(); ++j) {
      d_ = std::max(d_, vec_distance(a, inst.embeddings.at(ids[j]), inst.kernel));
    }
  }
}

double SimilarityTable::w(int64_t a, int64_t b) const {
  if (!inst_->explicit_w.empty()) {
    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
    const auto it = inst_->explicit_w.find(key);
    if (it == inst_->explicit_w.end()) {
      throw ContractError("SimilarityTable: no similarity for pair " +
                          std::to_string(a) + "," + std::to_string(b));
    }
    return it->second;
  }
  const auto& va = inst_->embeddings.at(a);
  const auto& vb = inst_->embeddings.at(b);
  if (inst_->kernel == SimilarityKernel::kCosine) {
    return 1.0 + vec_dot(va, vb) / (vec_norm(va) * vec_norm(vb));
  }
  return d_ - vec_distance(va, vb, inst_->kernel);
}

namespace {

// Precomputed per-domain quantities shared by utility and the maximizer.
struct UtilityState {
  const SubmodInstance* inst;
  SimilarityTable table;
  std::vector<double> base;     // max labeled similarity per domain id
  std::vector<double> us;      // weights, 1 when unweighted

  explicit UtilityState(const SubmodInstance& in) : inst(&in), table(in) {
    const auto& dom = in.all_unlabeled_ids;
    base.assign(dom.size(), 0.0);
    us.assign(dom.size(), 1.0);
    for (size_t i = 0; i < dom.size(); ++i) {
      for (int64_t l : in.labeled_ids) {
        base[i] = std::max(base[i], table.w(dom[i], l));
      }
      if (!in.weights.empty()) us[i] = in.weights.at(dom[i]);
    }
  }

  // Column of similarities from every domain id to candidate e.
  std::vector<double> column(int64_t e) const {
    const auto& dom = inst->all_unlabeled_ids;
    std::vector<double> col(dom.size());
    for (size_t i = 0; i < dom.size(); ++i) col[i] = table.w(dom[i], e);
    return col;
  }

  double value_of(const std::vector<double>& best) const {
    double f = 0;
    for (size_t i = 0; i < best.size(); ++i) {
      f += us[i] * std::max(0.0, best[i] - base[i]);
    }
    return f;
  }

  double gain_of(const std::vector<double>& best, const std::vector<double>& col) const {
    double g = 0;
    for (size_t i = 0; i < best.size(); ++i) {
      const double cur = std::max(best[i], base[i]);
      const double nxt = std::max(cur, col[i]);
      g += us[i] * (nxt - cur);
    }
    return g;
  }
};

}  // namespace

double utility(const SubmodInstance& inst, const std::vector<int64_t>& s) {
  inst.validate();
  const std::unordered_set<int64_t> cand(inst.candidate_ids.begin(),
                                         inst.candidate_ids.end());
  for (int64_t id : s) {
    if (!cand.count(id)) {
      throw ContractError("utility: id " + std::to_string(id) +
                          " is not a candidate");
    }
  }
  UtilityState st(inst);
  std::vector<double> best(inst.all_unlabeled_ids.size(), 0.0);
  for (int64_t e : s) {
    const std::vector<double> col = st.column(e);
    for (size_t i = 0; i < best.size(); ++i) best[i] = std::max(best[i], col[i]);
  }
  return st.value_of(best);
}

StreamResult stream_submod_max(const SubmodInstance& inst, double eps) {
  if (eps <= 0) throw ParamError("stream_submod_max: eps must be positive");
  inst.validate();
  StreamResult res;
  if (inst.budget == 0 || inst.candidate_ids.empty()) return res;

  UtilityState st(inst);
  const int64_t cap = inst.budget;

  // Pass 1: best single-element value per unit cost over feasible singletons.
  double m = 0;
  for (int64_t e : inst.candidate_ids) {
    const int64_t c = inst.costs.at(e);
    if (c > cap) continue;
    const double g = st.gain_of(std::vector<double>(st.base.size(), 0.0), st.column(e));
    m = std::max(m, g / static_cast<double>(c));
  }
  res.m = m;
  if (m <= 0) return res;

  // Thresholds (1+eps)^i covering [m, cap*m].
  const double step = std::log1p(eps);
  const int64_t lo = static_cast<int64_t>(std::ceil(std::log(m) / step - 1e-9));
  const int64_t hi = static_cast<int64_t>(
      std::floor(std::log(m * static_cast<double>(cap)) / step + 1e-9));
  struct Bucket {
    double v = 0;
    std::vector<int64_t> ids;
    std::vector<double> best;
    double f = 0;
    int64_t cost = 0;
  };
  std::vector<Bucket> buckets;
  for (int64_t i = lo; i <= hi; ++i) {
    Bucket b;
    b.v = std::exp(step * static_cast<double>(i));
    b.best.assign(st.base.size(), 0.0);
    buckets.push_back(std::move(b));
  }
  res.thresholds = static_cast<int64_t>(buckets.size());
  if (buckets.empty()) return res;

  // Pass 2: stream candidates in id order into every bucket.
  for (int64_t e : inst.candidate_ids) {
    const int64_t c = inst.costs.at(e);
    if (c > cap) continue;
    const std::vector<double> col = st.column(e);
    for (Bucket& b : buckets) {
      if (b.cost + c > cap) continue;
      const double gain = st.gain_of(b.best, col);
      const double need = static_cast<double>(c) * (b.v / 2.0 - b.f) /
                          static_cast<double>(cap - b.cost);
      if (gain < need) continue;
      b.ids.push_back(e);
      for (size_t i = 0; i < b.best.size(); ++i) {
        b.best[i] = std::max(b.best[i], col[i]);
      }
      b.f += gain;
      b.cost += c;
    }
  }

  const Bucket* win = &buckets[0];
  for (const Bucket& b : buckets) {
    if (b.f > win->f) win = &b;
  }
  res.chosen = win->ids;
  res.value = win->f;
  res.cost = win->cost;
  for (int64_t e : res.chosen) {
    res.delta = std::max(res.delta, static_cast<double>(inst.costs.at(e)) /
                                        static_cast<double>(cap));
  }
  return res;
}

BruteForceResult brute_force_opt(const SubmodInstance& inst) {
  inst.validate();
  const size_t n = inst.candidate_ids.size();
  if (n > 20) throw ParamError("brute_force_opt: more than 20 candidates");
  BruteForceResult res;
  if (n == 0) return res;

  UtilityState st(inst);
  std::vector<std::vector<double>> cols;
  std::vector<int64_t> costs;
  cols.reserve(n);
  for (int64_t e : inst.candidate_ids) {
    cols.push_back(st.column(e));
    costs.push_back(inst.costs.at(e));
  }

  std::vector<double> best(st.base.size());
  for (uint64_t mask = 1; mask < (uint64_t(1) << n); ++mask) {
    int64_t cost = 0;
    for (size_t j = 0; j < n; ++j) {
      if (mask & (uint64_t(1) << j)) cost += costs[j];
    }
    if (cost > inst.budget) continue;
    std::fill(best.begin(), best.end(), 0.0);
    for (size_t j = 0; j < n; ++j) {
      if (!(mask & (uint64_t(1) << j))) continue;
      for (size_t i = 0; i < best.size(); ++i) {
        best[i] = std::max(best[i], cols[j][i]);
      }
    }
    const double f = st.value_of(best);
    if (f > res.value) {
      res.value = f;
      res.best.clear();
      for (size_t j = 0; j < n; ++j) {
        if (mask & (uint64_t(1) << j)) res.best.push_back(inst.candidate_ids[j]);
      }
    }
  }
  return res;
}

namespace {

std::string fmt_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string dump_instance(const SubmodInstance& inst) {
  inst.validate();
  UtilityState st(inst);
  std::ostringstream out;
  out << "#budget," << inst.budget << "\n";
  const std::unordered_set<int64_t> cand(inst.candidate_ids.begin(),
                                         inst.candidate_ids.end());
  for (int64_t id : inst.candidate_ids) {
    const double us = inst.weights.empty() ? 1.0 : inst.weights.at(id);
    out << "#item," << id << "," << inst.costs.at(id) << "," << fmt_real(us) << "\n";
  }
  for (int64_t id : inst.all_unlabeled_ids) {
    if (cand.count(id)) continue;
    const double us = inst.weights.empty() ? 1.0 : inst.weights.at(id);
    out << "#extra," << id << "," << fmt_real(us) << "\n";
  }
  const auto& dom = inst.all_unlabeled_ids;
  std::set<std::pair<int64_t, int64_t>> emitted;
  for (size_t i = 0; i < dom.size(); ++i) {
    for (int64_t j : inst.candidate_ids) {
      const auto key = std::make_pair(std::min(dom[i], j), std::max(dom[i], j));
      if (!emitted.insert(key).second) continue;
      out << key.first << "," << key.second << ","
          << fmt_real(st.table.w(dom[i], j)) << "\n";
    }
  }
  if (!inst.labeled_ids.empty()) {
    for (size_t i = 0; i < dom.size(); ++i) {
      out << dom[i] << ",-1," << fmt_real(st.base[i]) << "\n";
    }
  }
  return out.str();
}

SubmodInstance restore_instance(const std::string& csv) {
  SubmodInstance inst;
  bool has_base = false;
  std::istringstream in(csv);
  std::string line;
  int64_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError("instance line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::string body = line;
    std::replace(body.begin(), body.end(), ',', ' ');
    std::istringstream os(body);
    if (line[0] == '#') {
      std::string tag;
      os >> tag;
      if (tag == "#budget") {
        if (!(os >> inst.budget)) fail("bad budget");
      } else if (tag == "#item") {
        int64_t id, cost;
        double usw;
        if (!(os >> id >> cost >> usw)) fail("bad item");
        inst.candidate_ids.push_back(id);
        inst.all_unlabeled_ids.push_back(id);
        inst.costs[id] = cost;
        inst.weights[id] = usw;
      } else if (tag == "#extra") {
        int64_t id;
        double usw;
        if (!(os >> id >> usw)) fail("bad extra");
        inst.all_unlabeled_ids.push_back(id);
        inst.weights[id] = usw;
      } else {
        fail("unknown header " + tag);
      }
      continue;
    }
    int64_t a, b;
    double wv;
    if (!(os >> a >> b >> wv)) fail("bad similarity triple");
    if (b == -1) has_base = true;
    inst.explicit_w[{std::min(a, b), std::max(a, b)}] = wv;
  }
  std::sort(inst.candidate_ids.begin(), inst.candidate_ids.end());
  std::sort(inst.all_unlabeled_ids.begin(), inst.all_unlabeled_ids.end());
  if (has_base) inst.labeled_ids.push_back(-1);
  inst.validate();
  return inst;
}

std::vector<Real> embed_sentence(const Sentence& s, TaggerModel& model,
                                 SentenceEmbedding kind) {
  const int64_t n = s.n_words();
  if (n == 0) throw ContractError("embed_sentence: empty sentence");
  if (kind == SentenceEmbedding::kAvgWordEmb) {
    const Tensor& emb = model.params.at("word_emb").value;
    const int64_t dim = emb.cols();
    std::vector<Real> out(static_cast<size_t>(dim), Real(0));
    for (const std::string& tok : s.tokens) {
      const int32_t id = model.vocab.word_id(tok);
      for (int64_t j = 0; j < dim; ++j) out[static_cast<size_t>(j)] += emb.at2(id, j);
    }
    for (Real& x : out) x /= static_cast<Real>(n);
    return out;
  }
  Rng eval_rng(0);
  FormattedBatch fb = format_batch({&s}, model.vocab);
  EncoderOutput enc = encode(fb, model, RunMode::kEval, eval_rng);
  const Tensor& h = enc.tape.value(enc.h_enc);
  const int64_t dim = h.cols();
  std::vector<Real> out(static_cast<size_t>(dim), Real(0));
  for (int64_t i = 1; i <= n; ++i) {
    for (int64_t j = 0; j < dim; ++j) out[static_cast<size_t>(j)] += h.at2(i, j);
  }
  for (Real& x : out) x /= static_cast<Real>(n);
  return out;
}

SelectionResult submod_select(TaggerModel& model,
                              const std::vector<const Sentence*>& pool,
                              const std::vector<const Sentence*>& labeled,
                              int64_t budget_words, Rng& rng,
                              const SubmodSelectOptions& opts) {
  if (opts.t < 1) throw ParamError("submod_select: t must be >= 1");
  if (budget_words < 0) throw ParamError("submod_select: negative budget");
  SelectionResult result;
  result.budget = budget_words;
  if (pool.empty() || budget_words == 0) return result;

  ScoreOptions sopts;
  sopts.seed = rng.next_u64();
  const Strategy base =
      opts.base == Strategy::kSubmod ? Strategy::kMnlp : opts.base;
  sopts.batch_size = opts.batch_size;
  std::vector<UncertaintyScore> base_scores = score_pool(model, pool, base, sopts);
  std::vector<UncertaintyScore> mnlp_scores =
      base == Strategy::kMnlp || !opts.weighted
          ? base_scores
          : score_pool(model, pool, Strategy::kMnlp, sopts);

  const bool ascending = base == Strategy::kMnlp;
  std::vector<size_t> order(pool.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const double va = base_scores[a].value, vb = base_scores[b].value;
    if (va != vb) return ascending ? va < vb : va > vb;
    return pool[a]->id < pool[b]->id;
  });

  // Candidate restriction: fill the t*K word budget in base-rank order.
  std::vector<std::pair<int64_t, int64_t>> ranked;
  ranked.reserve(order.size());
  for (size_t i : order) ranked.emplace_back(pool[i]->id, pool[i]->n_words());
  const SelectionResult restricted =
      knapsack_fill(ranked, opts.t * budget_words);

  std::unordered_set<int64_t> keep(restricted.chosen.begin(), restricted.chosen.end());
  SubmodInstance inst;
  inst.kernel = opts.kernel;
  inst.budget = budget_words;
  std::unordered_map<int64_t, double> mnlp_by_id;
  for (const UncertaintyScore& u : mnlp_scores) mnlp_by_id[u.sentence_id] = u.value;
  for (const Sentence* s : pool) {
    if (!keep.count(s->id)) continue;
    inst.candidate_ids.push_back(s->id);
    inst.costs[s->id] = s->n_words();
    inst.embeddings[s->id] = embed_sentence(*s, model, opts.embedding);
    if (opts.weighted) {
      inst.weights[s->id] = 1.0 - std::exp(mnlp_by_id.at(s->id));
    }
  }
  std::sort(inst.candidate_ids.begin(), inst.candidate_ids.end());
  inst.all_unlabeled_ids = inst.candidate_ids;
  for (const Sentence* s : labeled) {
    inst.labeled_ids.push_back(s->id);
    inst.embeddings[s->id] = embed_sentence(*s, model, opts.embedding);
  }

  const StreamResult stream = stream_submod_max(inst, opts.eps);

  // Report in base-rank order so budget accounting reads naturally.
  std::unordered_map<int64_t, size_t> rank;
  for (size_t i = 0; i < ranked.size(); ++i) rank[ranked[i].first] = i;
  result.chosen = stream.chosen;
  std::sort(result.chosen.begin(), result.chosen.end(),
            [&](int64_t a, int64_t b) { return rank.at(a) < rank.at(b); });
  for (int64_t id : result.chosen) result.words_used += inst.costs.at(id);
  return result;
}

}  // namespace seqal
