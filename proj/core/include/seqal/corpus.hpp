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
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqal/errors.hpp"
#include "seqal/rng.hpp"
#include "seqal/tensor.hpp"

namespace seqal {

enum class TagScheme { kBio, kBioes };

struct Sentence {
  int64_t id = 0;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::optional<std::string> genre;

  int64_t n_words() const { return static_cast<int64_t>(tokens.size()); }
};

struct Corpus {
  std::vector<Sentence> sentences;
  TagScheme scheme = TagScheme::kBioes;
  std::set<std::string> entity_types;

  int64_t total_words() const;
  int64_t size() const { return static_cast<int64_t>(sentences.size()); }
};

// [start, end) token range carrying one entity.
struct Span {
  int32_t start = 0;
  int32_t end = 0;
  std::string type;
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

// Extracts entity spans from a tag sequence.
//
// strict mode throws SchemeError (naming sentence_id and the offending
// position) on structurally broken sequences, e.g. I-X continuing nothing.
// Tolerant mode is for model output: only complete well-formed spans are
// returned and malformed fragments yield no span.
std::vector<Span> extract_spans(const std::vector<std::string>& tags,
                                TagScheme scheme, bool strict,
                                int64_t sentence_id = -1);

// Writes the tag sequence for spans over a sentence of n tokens.
std::vector<std::string> spans_to_tags(const std::vector<Span>& spans, int64_t n,
                                       TagScheme scheme);

// Two-column format: "token<TAB>tag" lines, blank line between sentences, and
// an optional "#genre=<name>" comment immediately before a sentence.
Corpus parse_conll(const std::string& text, TagScheme scheme);
std::string render_conll(const Corpus& corpus);

// Rewrites every sentence into the target scheme; spans are preserved
// exactly. Throws SchemeError (naming the sentence id) on broken spans.
Corpus convert_scheme(const Corpus& corpus, TagScheme target);

// Id assignments for words, characters and tags, with reserved entries.
struct Vocabulary {
  static constexpr int32_t kPadWord = 0;
  static constexpr int32_t kUnkWord = 1;
  static constexpr int32_t kBosWord = 2;
  static constexpr int32_t kEosWord = 3;
  static constexpr int32_t kPadChar = 0;
  static constexpr int32_t kUnkChar = 1;
  static constexpr int32_t kBowChar = 2;
  static constexpr int32_t kEowChar = 3;

  std::vector<std::string> id_to_word;  // [0..3] reserved
  std::unordered_map<std::string, int32_t> word_to_id;
  std::vector<int32_t> byte_to_char_id;  // 256 entries, -1 when absent
  std::vector<uint8_t> char_id_to_byte;  // aligned with ids >= 4
  std::vector<std::string> id_to_tag;    // "O" first, "[GO]" last
  std::unordered_map<std::string, int32_t> tag_to_id;

  int32_t word_id(const std::string& w) const;
  int32_t char_id(uint8_t b) const;
  int32_t tag_id(const std::string& t) const;  // throws SchemeError if unknown
  int32_t go_tag_id() const { return static_cast<int32_t>(id_to_tag.size()) - 1; }
  int32_t o_tag_id() const { return 0; }

  int64_t n_words() const { return static_cast<int64_t>(id_to_word.size()); }
  int64_t n_chars() const { return 4 + static_cast<int64_t>(char_id_to_byte.size()); }
  int64_t n_tags() const { return static_cast<int64_t>(id_to_tag.size()); }
  // Decodable tags; [GO] is input-only.
  int64_t n_output_tags() const { return n_tags() - 1; }
};

// Builds the vocabulary from corpus text and gold tags. Words seen fewer than
// unk_threshold times are dropped (they map to [UNK] at lookup); characters
// are the bytes of kept and dropped words alike. Words and characters are
// numbered in first-occurrence order, tags as "O", sorted entity tags, "[GO]".
Vocabulary build_vocabulary(const Corpus& corpus, int64_t unk_threshold = 1);

struct EmbeddingTable {
  int64_t dim = 0;
  std::unordered_map<std::string, std::vector<Real>> vectors;
};

// One line per word: the token then dim floats, space-separated. The
// dimension is fixed by the first line; mismatches raise ParseError naming
// the line number.
EmbeddingTable load_embeddings(const std::string& text);

// Model-ready grids for a batch of sentences. Words are framed
// [BOS] w1..wk [EOS] and padded to padded_len; the characters of each word
// are framed [BOW] c1..cm [EOW] and padded to padded_word_len. BOS/EOS have
// the frame-only character sequence; [PAD] words are all-[PAD] characters.
struct FormattedBatch {
  int64_t batch = 0;
  int64_t padded_len = 0;       // framed word positions per sentence
  int64_t padded_word_len = 0;  // framed characters per word
  std::vector<int32_t> word_ids;   // [batch x padded_len]
  std::vector<int32_t> char_ids;   // [batch x padded_len x padded_word_len]
  std::vector<int32_t> tag_ids;    // [batch x padded_len], 0 outside real words
  std::vector<uint8_t> loss_mask;  // [batch x padded_len], 1 at real words only
  std::vector<int32_t> char_len;   // [batch x padded_len] framed char count
  std::vector<int32_t> length;     // [batch] real word count
  std::vector<int64_t> sentence_id;

  int64_t rows() const { return batch * padded_len; }
  int64_t mask_total() const;
};

// Sentence lengths are padded up to the next bucket boundary
// {8, 16, 32, 64, 128} (exact framed length beyond the last boundary).
int64_t bucket_padded_len(int64_t framed_len);

FormattedBatch format_batch(const std::vector<const Sentence*>& sentences,
                            const Vocabulary& vocab);

// Buckets sentences by padded length and cuts batches of at most batch_size.
// With an rng, sentence order and emitted batch order are shuffled.
std::vector<std::vector<const Sentence*>> make_batches(
    const std::vector<const Sentence*>& sentences, int64_t batch_size,
    Rng* rng);

}  // namespace seqal
