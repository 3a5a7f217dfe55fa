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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "topicmine/corpus.hpp"

namespace topicmine::defmine {

enum class DefinitionCategory : std::uint8_t { Sufficient, Informational, Referential, Personal, NonDefinition };
inline constexpr std::size_t kCategoryCount = 5;

const char* category_name(DefinitionCategory c);
/// Accepts the names above in any case, plus "non_definition"/"non-definition".
DefinitionCategory parse_category(std::string_view name);

/// "{topic} <connective> {description}".
struct DefinitionPattern {
  std::string template_text;
  std::string connective;  // lowercase, single-spaced
  int priority = 0;  // lower wins

  /// Validates the slot layout and derives the connective.
  static DefinitionPattern parse(std::string_view template_text, int priority);
  const std::string& id() const { return connective; }
};

/// is defined as, is a, is an, refers to, refer to, means, stands for.
std::vector<DefinitionPattern> default_patterns();

/// JSON list of {"template": ..., "priority": ...}; returned sorted by priority.
std::vector<DefinitionPattern> load_patterns(const std::filesystem::path& path);

class OpinionLexicon {
 public:
  /// Small bundled lexicon (negative words include superlative opinion words).
  static OpinionLexicon defaults();
  /// One word per line; lines starting with ';' or '#' are comments.
  static OpinionLexicon load(const std::filesystem::path& negative,
                             const std::optional<std::filesystem::path>& positive = std::nullopt);

  OpinionLexicon(std::set<std::string> negative, std::set<std::string> positive);

  bool is_negative(std::string_view word) const { return negative_.contains(std::string(word)); }
  const std::set<std::string>& negative() const { return negative_; }
  const std::set<std::string>& positive() const { return positive_; }

 private:
  std::set<std::string> negative_;
  std::set<std::string> positive_;
};

struct OpinionVerdict {
  bool keep = true;
  std::string reason;  // first negative word hit when dropped
};

/// Drops the sentence if any lowercase word token is in the negative set.
OpinionVerdict opinion_filter(std::string_view sentence, const OpinionLexicon& lexicon);

/// Lowercase word tokens as seen by the opinion filter.
std::vector<std::string> opinion_tokens(std::string_view sentence);

struct ExtractedTopic {
  std::string topic;
  std::string description;
  std::string pattern_id;
};

/// The first pattern (by priority) whose connective occurs as whole words
/// wins. The topic is the noun-phrase-like text before it, without leading
/// determiners; pronoun or empty topics give nullopt.
std::optional<ExtractedTopic> extract_topic(std::string_view sentence, std::span<const DefinitionPattern> patterns);

struct Classification {
  DefinitionCategory category = DefinitionCategory::NonDefinition;
  double confidence = 0.0;
};

struct ClassifierConfig {
  int epochs = 12;
  double learning_rate = 0.2;
  std::uint64_t seed = 13;
  std::uint32_t hash_dim = 1u << 18;
};

using LabeledText = std::pair<std::string, DefinitionCategory>;

class SentenceClassifier {
 public:
  enum class Kind { rule_based, linear };

  static SentenceClassifier rule_based(std::vector<DefinitionPattern> patterns = default_patterns());

  Kind kind() const { return kind_; }
  Classification classify(std::string_view sentence) const;

  /// Class probabilities of the linear model.
  std::array<double, kCategoryCount> probabilities(std::string_view sentence) const;

  void save(const std::filesystem::path& path) const;
  static SentenceClassifier load(const std::filesystem::path& path);

 private:
  friend SentenceClassifier train_sentence_classifier(std::span<const LabeledText>, const ClassifierConfig&);

  SentenceClassifier(Kind kind, std::vector<DefinitionPattern> patterns, std::uint32_t hash_dim);
  Classification classify_rules(std::string_view sentence) const;

  Kind kind_;
  std::vector<DefinitionPattern> patterns_;
  std::uint32_t hash_dim_ = 0;
  std::vector<double> weights_;  // hash_dim x categories
};

/// Hashed unigram/bigram features (plus bias and a length bucket).
std::vector<std::uint32_t> sentence_features(std::string_view sentence, std::uint32_t dim);

/// Multinomial logistic regression trained by seeded SGD.
SentenceClassifier train_sentence_classifier(std::span<const LabeledText> rows, const ClassifierConfig& config);

/// CSV "category,text"; the text is everything after the first comma.
std::vector<LabeledText> load_training_csv(const std::filesystem::path& path);

struct DefinitionRecord {
  std::string topic_key;
  std::string topic_surface;
  std::string sentence;
  std::string description;
  std::string doc_id;
  std::size_t sentence_index = 0;
  DefinitionCategory category = DefinitionCategory::Sufficient;
  std::string pattern_id;
  double confidence = 0.0;

  bool operator==(const DefinitionRecord&) const = default;
};

/// split -> classify (Sufficient only) -> extract topic -> opinion filter.
std::vector<DefinitionRecord> mine_definitions(const corpus::Document& doc, const SentenceClassifier& classifier,
                                               std::span<const DefinitionPattern> patterns,
                                               const OpinionLexicon& lexicon,
                                               const corpus::AbbreviationList& abbreviations =
                                                   corpus::AbbreviationList::defaults());

struct PrfScores {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Binary precision/recall/F1 with 1 as the positive class.
PrfScores binary_prf(std::span<const int> predicted, std::span<const int> gold);

/// Sufficient-vs-rest scores of a classifier on binary-labelled rows
/// (1 = Sufficient). Both labels must be present.
PrfScores evaluate_sufficient(const SentenceClassifier& classifier,
                              std::span<const std::pair<std::string, int>> rows);

/// Rule-based classifier over the given patterns, evaluated as above.
PrfScores eval_rule_baseline(std::span<const std::pair<std::string, int>> rows,
                             std::span<const DefinitionPattern> patterns = {});

}  // namespace topicmine::defmine
