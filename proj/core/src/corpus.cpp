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

#include "seqal/corpus.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace seqal {

namespace {

constexpr int64_t kBuckets[] = {8, 16, 32, 64, 128};

bool valid_tag(const std::string& tag, TagScheme scheme) {
  if (tag == "O") return true;
  if (tag.size() < 3 || tag[1] != '-') return false;
  const char head = tag[0];
  if (scheme == TagScheme::kBio) return head == 'B' || head == 'I';
  return head == 'B' || head == 'I' || head == 'E' || head == 'S';
}

std::string tag_type(const std::string& tag) { return tag.substr(2); }

[[noreturn]] void span_error(int64_t sentence_id, int64_t pos, const std::string& what) {
  std::ostringstream os;
  os << "sentence " << sentence_id << ", token " << pos << ": " << what;
  throw SchemeError(os.str());
}

}  // namespace

int64_t Corpus::total_words() const {
  int64_t n = 0;
  for (const Sentence& s : sentences) n += s.n_words();
  return n;
}

std::vector<Span> extract_spans(const std::vector<std::string>& tags,
                                TagScheme scheme, bool strict,
                                int64_t sentence_id) {
  std::vector<Span> spans;
  const int64_t n = static_cast<int64_t>(tags.size());
  if (scheme == TagScheme::kBio) {
    int64_t start = -1;
    std::string type;
    auto close = [&](int64_t end) {
      if (start >= 0) {
        spans.push_back({static_cast<int32_t>(start), static_cast<int32_t>(end), type});
        start = -1;
      }
    };
    for (int64_t i = 0; i < n; ++i) {
      const std::string& t = tags[static_cast<size_t>(i)];
      if (t == "O") {
        close(i);
      } else if (t[0] == 'B') {
        close(i);
        start = i;
        type = tag_type(t);
      } else {  // I-
        if (start >= 0 && tag_type(t) == type) continue;
        if (strict) span_error(sentence_id, i, t + " continues no open span");
        close(i);  // malformed continuation: drop it
        start = -1;
      }
    }
    close(n);
    return spans;
  }

  // BIOES: only S alone or a complete B I* E run of one type forms a span.
  int64_t i = 0;
  while (i < n) {
    const std::string& t = tags[static_cast<size_t>(i)];
    if (t == "O") {
      ++i;
      continue;
    }
    if (t[0] == 'S') {
      spans.push_back({static_cast<int32_t>(i), static_cast<int32_t>(i + 1), tag_type(t)});
      ++i;
      continue;
    }
    if (t[0] == 'B') {
      const std::string type = tag_type(t);
      int64_t j = i + 1;
      while (j < n && tags[static_cast<size_t>(j)][0] == 'I' &&
             tag_type(tags[static_cast<size_t>(j)]) == type) {
        ++j;
      }
      if (j < n && tags[static_cast<size_t>(j)][0] == 'E' &&
          tag_type(tags[static_cast<size_t>(j)]) == type) {
        spans.push_back({static_cast<int32_t>(i), static_cast<int32_t>(j + 1), type});
        i = j + 1;
        continue;
      }
      if (strict) span_error(sentence_id, i, t + " opens a span that never closes");
      i = j;  // skip the malformed fragment
      continue;
    }
    // Stray I- or E-.
    if (strict) span_error(sentence_id, i, t + " continues no open span");
    ++i;
  }
  return spans;
}

std::vector<std::string> spans_to_tags(const std::vector<Span>& spans, int64_t n,
                                       TagScheme scheme) {
  std::vector<std::string> tags(static_cast<size_t>(n), "O");
  for (const Span& s : spans) {
    if (s.start < 0 || s.end > n || s.start >= s.end) {
      throw SchemeError("spans_to_tags: span outside sentence");
    }
    if (scheme == TagScheme::kBio) {
      tags[static_cast<size_t>(s.start)] = "B-" + s.type;
      for (int32_t i = s.start + 1; i < s.end; ++i) tags[static_cast<size_t>(i)] = "I-" + s.type;
    } else if (s.end - s.start == 1) {
      tags[static_cast<size_t>(s.start)] = "S-" + s.type;
    } else {
      tags[static_cast<size_t>(s.start)] = "B-" + s.type;
      for (int32_t i = s.start + 1; i < s.end - 1; ++i) tags[static_cast<size_t>(i)] = "I-" + s.type;
      tags[static_cast<size_t>(s.end - 1)] = "E-" + s.type;
    }
  }
  return tags;
}

Corpus parse_conll(const std::string& text, TagScheme scheme) {
  Corpus corpus;
  corpus.scheme = scheme;
  Sentence cur;
  std::optional<std::string> pending_genre;
  int64_t line_no = 0;

  auto flush = [&]() {
    if (cur.tokens.empty()) return;
    cur.id = corpus.size();
    cur.genre = pending_genre;
    pending_genre.reset();
    corpus.sentences.push_back(std::move(cur));
    cur = Sentence{};
  };

  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      if (line.rfind("#genre=", 0) == 0) pending_genre = line.substr(7);
      continue;
    }
    std::istringstream fields(line);
    std::string token, tag, extra;
    if (!(fields >> token >> tag) || (fields >> extra)) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected 'token tag', got: " + line);
    }
    if (!valid_tag(tag, scheme)) {
      throw SchemeError("line " + std::to_string(line_no) + ": tag " + tag +
                        " is not valid in the declared scheme");
    }
    cur.tokens.push_back(std::move(token));
    cur.tags.push_back(std::move(tag));
  }
  flush();

  for (const Sentence& s : corpus.sentences) {
    // Validates span structure eagerly so downstream code can trust it.
    for (const Span& sp : extract_spans(s.tags, scheme, /*strict=*/true, s.id)) {
      corpus.entity_types.insert(sp.type);
    }
  }
  return corpus;
}

std::string render_conll(const Corpus& corpus) {
  std::ostringstream os;
  bool first = true;
  for (const Sentence& s : corpus.sentences) {
    if (!first) os << "\n";
    first = false;
    if (s.genre) os << "#genre=" << *s.genre << "\n";
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      os << s.tokens[i] << "\t" << s.tags[i] << "\n";
    }
  }
  return os.str();
}

Corpus convert_scheme(const Corpus& corpus, TagScheme target) {
  Corpus out;
  out.scheme = target;
  out.entity_types = corpus.entity_types;
  out.sentences.reserve(corpus.sentences.size());
  for (const Sentence& s : corpus.sentences) {
    Sentence ns = s;
    const auto spans = extract_spans(s.tags, corpus.scheme, /*strict=*/true, s.id);
    ns.tags = spans_to_tags(spans, s.n_words(), target);
    out.sentences.push_back(std::move(ns));
  }
  return out;
}

int32_t Vocabulary::word_id(const std::string& w) const {
  auto it = word_to_id.find(w);
  return it == word_to_id.end() ? kUnkWord : it->second;
}

int32_t Vocabulary::char_id(uint8_t b) const {
  const int32_t id = byte_to_char_id[b];
  return id < 0 ? kUnkChar : id;
}

int32_t Vocabulary::tag_id(const std::string& t) const {
  auto it = tag_to_id.find(t);
  if (it == tag_to_id.end()) {
    throw SchemeError("tag_id: unknown tag " + t);
  }
  return it->second;
}

Vocabulary build_vocabulary(const Corpus& corpus, int64_t unk_threshold) {
  if (unk_threshold < 1) throw ParamError("build_vocabulary: unk_threshold must be >= 1");
  Vocabulary v;
  v.id_to_word = {"[PAD]", "[UNK]", "[BOS]", "[EOS]"};
  for (size_t i = 0; i < v.id_to_word.size(); ++i) {
    v.word_to_id[v.id_to_word[i]] = static_cast<int32_t>(i);
  }
  v.byte_to_char_id.assign(256, -1);

  std::unordered_map<std::string, int64_t> counts;
  std::vector<std::string> word_order;
  for (const Sentence& s : corpus.sentences) {
    for (const std::string& w : s.tokens) {
      if (counts[w]++ == 0) word_order.push_back(w);
      for (char c : w) {
        const uint8_t b = static_cast<uint8_t>(c);
        if (v.byte_to_char_id[b] < 0) {
          v.byte_to_char_id[b] = static_cast<int32_t>(4 + v.char_id_to_byte.size());
          v.char_id_to_byte.push_back(b);
        }
      }
    }
  }
  for (const std::string& w : word_order) {
    if (counts[w] >= unk_threshold && !v.word_to_id.count(w)) {
      v.word_to_id[w] = static_cast<int32_t>(v.id_to_word.size());
      v.id_to_word.push_back(w);
    }
  }

  std::set<std::string> entity_tags;
  for (const Sentence& s : corpus.sentences) {
    for (const std::string& t : s.tags) {
      if (t != "O") entity_tags.insert(t);
    }
  }
  v.id_to_tag.push_back("O");
  for (const std::string& t : entity_tags) v.id_to_tag.push_back(t);
  v.id_to_tag.push_back("[GO]");
  for (size_t i = 0; i < v.id_to_tag.size(); ++i) {
    v.tag_to_id[v.id_to_tag[i]] = static_cast<int32_t>(i);
  }
  return v;
}

EmbeddingTable load_embeddings(const std::string& text) {
  EmbeddingTable table;
  std::istringstream in(text);
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    std::vector<Real> vec;
    double x;
    while (fields >> x) vec.push_back(static_cast<Real>(x));
    if (!fields.eof()) {
      throw ParseError("line " + std::to_string(line_no) + ": non-numeric embedding value");
    }
    if (vec.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": no embedding values");
    }
    if (table.dim == 0) {
      table.dim = static_cast<int64_t>(vec.size());
    } else if (static_cast<int64_t>(vec.size()) != table.dim) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(table.dim) + " values, got " +
                       std::to_string(vec.size()));
    }
    table.vectors[word] = std::move(vec);
  }
  return table;
}

int64_t FormattedBatch::mask_total() const {
  int64_t n = 0;
  for (uint8_t m : loss_mask) n += m;
  return n;
}

int64_t bucket_padded_len(int64_t framed_len) {
  for (int64_t b : kBuckets) {
    if (framed_len <= b) return b;
  }
  return framed_len;
}

FormattedBatch format_batch(const std::vector<const Sentence*>& sentences,
                            const Vocabulary& vocab) {
  if (sentences.empty()) throw ParamError("format_batch: empty batch");
  FormattedBatch fb;
  fb.batch = static_cast<int64_t>(sentences.size());
  int64_t max_framed = 0;
  int64_t max_word = 0;
  for (const Sentence* s : sentences) {
    max_framed = std::max(max_framed, s->n_words() + 2);
    for (const std::string& w : s->tokens) {
      max_word = std::max(max_word, static_cast<int64_t>(w.size()) + 2);
    }
  }
  fb.padded_len = bucket_padded_len(max_framed);
  fb.padded_word_len = std::max<int64_t>(max_word, 2);  // frame-only words

  const int64_t L = fb.padded_len, W = fb.padded_word_len;
  fb.word_ids.assign(static_cast<size_t>(fb.batch * L), Vocabulary::kPadWord);
  fb.char_ids.assign(static_cast<size_t>(fb.batch * L * W), Vocabulary::kPadChar);
  fb.tag_ids.assign(static_cast<size_t>(fb.batch * L), 0);
  fb.loss_mask.assign(static_cast<size_t>(fb.batch * L), 0);
  fb.char_len.assign(static_cast<size_t>(fb.batch * L), 0);
  fb.length.resize(static_cast<size_t>(fb.batch));
  fb.sentence_id.resize(static_cast<size_t>(fb.batch));

  for (int64_t b = 0; b < fb.batch; ++b) {
    const Sentence& s = *sentences[static_cast<size_t>(b)];
    const int64_t k = s.n_words();
    fb.length[static_cast<size_t>(b)] = static_cast<int32_t>(k);
    fb.sentence_id[static_cast<size_t>(b)] = s.id;
    const bool has_tags = !s.tags.empty();

    auto frame_chars = [&](int64_t pos, const std::string* word) {
      int32_t* out = fb.char_ids.data() + (b * L + pos) * W;
      int64_t n = 0;
      out[n++] = Vocabulary::kBowChar;
      if (word) {
        for (char c : *word) out[n++] = vocab.char_id(static_cast<uint8_t>(c));
      }
      out[n++] = Vocabulary::kEowChar;
      fb.char_len[static_cast<size_t>(b * L + pos)] = static_cast<int32_t>(n);
    };

    fb.word_ids[static_cast<size_t>(b * L)] = Vocabulary::kBosWord;
    frame_chars(0, nullptr);
    for (int64_t i = 0; i < k; ++i) {
      const int64_t pos = i + 1;
      fb.word_ids[static_cast<size_t>(b * L + pos)] = vocab.word_id(s.tokens[static_cast<size_t>(i)]);
      frame_chars(pos, &s.tokens[static_cast<size_t>(i)]);
      fb.loss_mask[static_cast<size_t>(b * L + pos)] = 1;
      if (has_tags) {
        fb.tag_ids[static_cast<size_t>(b * L + pos)] = vocab.tag_id(s.tags[static_cast<size_t>(i)]);
      }
    }
    fb.word_ids[static_cast<size_t>(b * L + k + 1)] = Vocabulary::kEosWord;
    frame_chars(k + 1, nullptr);
  }
  return fb;
}

std::vector<std::vector<const Sentence*>> make_batches(
    const std::vector<const Sentence*>& sentences, int64_t batch_size,
    Rng* rng) {
  if (batch_size < 1) throw ParamError("make_batches: batch_size must be >= 1");
  std::vector<const Sentence*> order = sentences;
  if (rng) rng->shuffle(order);

  std::map<int64_t, std::vector<const Sentence*>> buckets;
  for (const Sentence* s : order) {
    buckets[bucket_padded_len(s->n_words() + 2)].push_back(s);
  }
  std::vector<std::vector<const Sentence*>> batches;
  for (auto& [len, group] : buckets) {
    for (size_t i = 0; i < group.size(); i += static_cast<size_t>(batch_size)) {
      const size_t end = std::min(group.size(), i + static_cast<size_t>(batch_size));
      batches.emplace_back(group.begin() + static_cast<int64_t>(i),
                           group.begin() + static_cast<int64_t>(end));
    }
  }
  if (rng) rng->shuffle(batches);
  return batches;
}

}  // namespace seqal
