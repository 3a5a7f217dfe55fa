// Copyright 2026 The Topicmine Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topicmine/corpus.hpp"

namespace topicmine::nertag {

using Label = std::uint32_t;

/// O, then B-t and I-t for every entity type t, in type order:
/// ordinal 0 = O, 1 + 2k = B-type_k, 2 + 2k = I-type_k.
class LabelSet {
 public:
  /// person, organization, location, product, project, field_of_study,
  /// creative_work, event.
  static LabelSet defaults();

  explicit LabelSet(std::vector<std::string> types);

  std::size_t size() const { return names_.size(); }
  std::size_t type_count() const { return types_.size(); }
  const std::vector<std::string>& types() const { return types_; }
  const std::vector<std::string>& names() const { return names_; }

  const std::string& name(Label label) const { return names_.at(label); }
  Label ordinal(std::string_view name) const;
  std::size_t type_index(std::string_view type) const;

  static constexpr Label outside() { return 0; }
  static constexpr Label begin(std::size_t type) { return static_cast<Label>(1 + 2 * type); }
  static constexpr Label inside(std::size_t type) { return static_cast<Label>(2 + 2 * type); }
  static constexpr bool is_begin(Label l) { return l != 0 && l % 2 == 1; }
  static constexpr bool is_inside(Label l) { return l != 0 && l % 2 == 0; }
  static constexpr std::size_t type_of(Label l) { return (l - 1) / 2; }

  /// Strict BIO transition: I-t only after B-t or I-t. Use outside() as the
  /// predecessor of the first token.
  static constexpr bool can_follow(Label prev, Label next) {
    return !is_inside(next) || (prev != 0 && type_of(prev) == type_of(next));
  }

  bool valid(std::span<const Label> labels) const;

  bool operator==(const LabelSet& o) const { return types_ == o.types_; }

 private:
  std::vector<std::string> types_;
  std::vector<std::string> names_;
};

/// Dense token-by-label scores, row-major.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Sum of the chosen label's score over all tokens.
double path_score(const ScoreMatrix& scores, std::span<const Label> labels);

/// Maximum-score label sequence among the BIO-valid ones. Ties resolve to the
/// smaller label ordinal at the latest differing position.
std::vector<Label> viterbi_decode(const ScoreMatrix& scores, const LabelSet& labels);

/// Per-token argmax, then every I-t that cannot follow its (already repaired)
/// predecessor is rewritten to O.
std::vector<Label> greedy_decode(const ScoreMatrix& scores, const LabelSet& labels);

struct Mention {
  std::string doc_id;
  std::size_t sentence_index = 0;
  std::size_t token_begin = 0;
  std::size_t token_end = 0;
  corpus::Span char_span;  // into the sentence text
  std::string surface;
  std::size_t entity_type = 0;
  double score = 0.0;
  bool from_title = false;
};

/// One mention per maximal B-t (I-t)* run. `scores`, when given, supplies the
/// mention score (sum of chosen-label scores over the span).
std::vector<Mention> extract_mentions(const corpus::Sentence& sentence, const std::vector<corpus::Token>& tokens,
                                      std::span<const Label> labels, const LabelSet& label_set,
                                      const ScoreMatrix* scores = nullptr);

// ---------------------------------------------------------------------------
// Token scorer

/// Word shape: A-Z -> X, a-z -> x, 0-9 -> 9, other bytes kept, runs collapsed.
std::string word_shape(std::string_view word);

/// Feature strings for one token. Deterministic.
std::vector<std::string> feature_strings(std::span<const std::string> words, std::size_t index, bool from_title);

/// Feature strings hashed into [0, dim).
std::vector<std::uint32_t> featurize(std::span<const std::string> words, std::size_t index, bool from_title,
                                     std::uint32_t dim);

std::vector<double> softmax(std::span<const double> logits);

struct FocalLoss {
  double loss = 0.0;
  std::vector<double> gradient;  // d loss / d logits
};

/// -(1-p)^gamma * log p on the gold-class probability, with the gradient taken
/// through the softmax that produced `probs`. p is clamped to 1e-12 for the log.
FocalLoss focal_loss(std::span<const double> probs, Label gold, double gamma);

struct LabeledSentence {
  std::vector<std::string> tokens;
  std::vector<Label> labels;
  bool from_title = false;

  bool operator==(const LabeledSentence&) const = default;
};

struct TaggerConfig {
  double gamma = 1.6;
  int epochs = 8;
  double learning_rate = 0.1;
  std::uint64_t seed = 7;
  std::uint32_t hash_dim = 1u << 18;
};

/// Hashed-feature softmax classifier over the label set.
class TaggerModel {
 public:
  TaggerModel(LabelSet labels, std::uint32_t hash_dim, double gamma);

  const LabelSet& labels() const { return labels_; }
  std::uint32_t hash_dim() const { return hash_dim_; }
  double gamma() const { return gamma_; }
  double training_loss() const { return training_loss_; }

  std::span<const double> weights() const { return weights_; }
  std::span<double> weights() { return weights_; }

  std::vector<double> logits(std::span<const std::uint32_t> features) const;

  /// Log-softmax rows, one per token.
  ScoreMatrix score_tokens(std::span<const std::string> words, bool from_title = false) const;

  void save(const std::filesystem::path& path) const;
  static TaggerModel load(const std::filesystem::path& path);

 private:
  friend TaggerModel train_tagger(std::span<const LabeledSentence>, const LabelSet&, const TaggerConfig&);

  LabelSet labels_;
  std::uint32_t hash_dim_;
  double gamma_;
  double training_loss_ = 0.0;
  std::vector<double> weights_;  // hash_dim x labels
};

/// Per-token SGD on focal loss in a seeded shuffle order. Deterministic.
TaggerModel train_tagger(std::span<const LabeledSentence> data, const LabelSet& labels, const TaggerConfig& config);

/// Decodes with Viterbi and returns the mentions of one sentence.
std::vector<Mention> tag_sentence(const TaggerModel& model, const corpus::Sentence& sentence,
                                  const std::vector<corpus::Token>& tokens);

// ---------------------------------------------------------------------------
// Augmentation

enum class AugmentMode { lowercase, entity_replace };

/// Entity type name -> replacement surfaces.
using EntityBank = std::map<std::string, std::vector<std::string>>;

/// Returns the input followed by one augmented copy of each sentence.
std::vector<LabeledSentence> augment(std::span<const LabeledSentence> data, AugmentMode mode, const LabelSet& labels,
                                     const EntityBank& bank, std::uint64_t seed);

// ---------------------------------------------------------------------------
// File formats

/// JSON object: type -> list of surfaces.
EntityBank load_entity_bank(const std::filesystem::path& path);

/// JSONL: {"tokens": [...], "labels": [...], "from_title": bool?}. Gold
/// sequences must be BIO-valid.
std::vector<LabeledSentence> load_labeled_sentences(const std::filesystem::path& path, const LabelSet& labels);
void save_labeled_sentences(const std::filesystem::path& path, std::span<const LabeledSentence> data,
                            const LabelSet& labels);

/// One sentence of an externally produced score file. Columns are reordered
/// into LabelSet ordinal order on load.
struct ExternalScores {
  std::string doc_id;
  std::size_t sentence_index = 0;
  ScoreMatrix scores;
};

/// JSONL: {"doc_id", "sentence_index", "labels": [...], "scores": [[...]]}.
std::vector<ExternalScores> load_score_file(const std::filesystem::path& path, const LabelSet& labels);

}  // namespace topicmine::nertag
