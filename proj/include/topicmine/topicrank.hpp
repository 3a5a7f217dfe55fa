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
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topicmine/nertag.hpp"

namespace topicmine::topicrank {

/// Case-folds, collapses whitespace and strips leading/trailing punctuation.
/// nullopt when nothing is left (the mention is rejected).
std::optional<std::string> normalize_key(std::string_view surface);

struct TopicCandidate {
  std::string key;
  std::string display_name;  // most frequent original surface
  std::size_t entity_type = 0;  // majority type
  std::int64_t ner_frequency = 0;
  std::int64_t document_frequency = 0;
  std::int64_t title_frequency = 0;
  std::set<std::string> doc_ids;
  std::vector<std::int64_t> type_histogram;
  std::map<std::string, std::int64_t> surface_counts;

  bool operator==(const TopicCandidate&) const = default;
};

/// What one document added to one key. Kept so deletion is exact.
struct KeyContribution {
  std::int64_t mentions = 0;
  std::int64_t title_mentions = 0;
  std::vector<std::int64_t> type_histogram;
  std::map<std::string, std::int64_t> surface_counts;

  bool operator==(const KeyContribution&) const = default;
};

using DocContribution = std::map<std::string, KeyContribution>;

/// Aggregated topic candidates plus a per-document contribution ledger. The
/// ledger doubles as the seen-document guard: a document is counted once
/// until it is removed.
class CandidateStore {
 public:
  explicit CandidateStore(std::size_t type_count = nertag::LabelSet::defaults().type_count());

  /// Adds the mentions of one document. Returns false (and changes nothing)
  /// if the document was already accumulated.
  bool accumulate(std::string_view doc_id, std::span<const nertag::Mention> mentions);

  /// Subtracts a document's recorded contribution. Returns false for an
  /// unknown document.
  bool remove_document(std::string_view doc_id);

  bool contains_document(std::string_view doc_id) const;

  /// Folds in a store built from a disjoint document set.
  void merge(const CandidateStore& other);

  const TopicCandidate* find(std::string_view key) const;
  const std::map<std::string, TopicCandidate, std::less<>>& candidates() const { return candidates_; }
  const std::map<std::string, DocContribution, std::less<>>& ledger() const { return ledger_; }
  std::size_t type_count() const { return type_count_; }
  std::size_t size() const { return candidates_.size(); }

  /// Writes candidates.jsonl (inspection) and ledger.jsonl (resumption).
  void save(const std::filesystem::path& dir) const;
  /// Rebuilds from ledger.jsonl and cross-checks against candidates.jsonl.
  static CandidateStore load(const std::filesystem::path& dir);

  bool operator==(const CandidateStore& o) const {
    return type_count_ == o.type_count_ && candidates_ == o.candidates_ && ledger_ == o.ledger_;
  }

 private:
  void apply(std::string_view doc_id, const DocContribution& contribution, int sign);
  static void refresh_derived(TopicCandidate& c);

  std::size_t type_count_;
  std::map<std::string, TopicCandidate, std::less<>> candidates_;
  std::map<std::string, DocContribution, std::less<>> ledger_;
};

/// Top-n keys by NER frequency, ties broken by key.
std::vector<std::string> shortlist(const CandidateStore& store, std::size_t n);

enum class Feature : std::size_t {
  ner_freq,
  doc_freq,
  title_freq,
  ner_per_doc,
  title_per_doc,
  title_per_ner,
  log1p_ner,
  log1p_doc,
  log1p_title,
};
inline constexpr std::size_t kFeatureCount = 9;

const char* feature_name(Feature f);

struct RankFeatures {
  std::array<double, kFeatureCount> values{};

  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
};

RankFeatures compute_features(const TopicCandidate& candidate);

struct LabeledFeatures {
  RankFeatures features;
  int label = 0;
};

struct GbdtConfig {
  int num_trees = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  std::size_t min_leaf_count = 5;
  double subsample = 1.0;  // fraction of rows drawn (without replacement) per tree
  std::uint64_t seed = 17;
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;  // go left when value <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const RankFeatures& f) const;
  int depth() const;
  bool operator==(const RegressionTree&) const = default;
};

class GbdtModel {
 public:
  GbdtModel(double base_score, double learning_rate) : base_score_(base_score), learning_rate_(learning_rate) {}

  double base_score() const { return base_score_; }
  double learning_rate() const { return learning_rate_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  void add_tree(RegressionTree tree);

  /// base + lr * sum of leaf values.
  double margin(const RankFeatures& f) const;

  void save(const std::filesystem::path& path) const;
  static GbdtModel load(const std::filesystem::path& path);

  bool operator==(const GbdtModel&) const = default;

 private:
  double base_score_;
  double learning_rate_;
  std::vector<RegressionTree> trees_;
};

/// Boosted logistic regression: base score = prior log-odds, each tree is a
/// least-squares fit to the log-loss residuals with Newton leaf values.
GbdtModel train_gbdt(std::span<const LabeledFeatures> rows, const GbdtConfig& config);

/// sigmoid(margin).
double score_topic(const GbdtModel& model, const RankFeatures& features);

struct RankedTopic {
  std::string key;
  double score = 0.0;

  bool operator==(const RankedTopic&) const = default;
};

struct RankedTopicList {
  std::vector<RankedTopic> entries;
  std::size_t shortlist_size = 0;
  std::size_t top_k = 0;
  double min_score = 0.0;

  bool operator==(const RankedTopicList&) const = default;
};

inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

RankedTopicList rerank_and_filter(std::span<const std::string> shortlist_keys, const CandidateStore& store,
                                  const GbdtModel& model, std::size_t top_k, double min_score);

/// Probability that a random positive outranks a random negative; ties count 1/2.
double auc(std::span<const double> scores, std::span<const int> labels);

/// CSV "key,label" with an optional header row. Keys are normalized on load.
std::map<std::string, int> load_label_file(const std::filesystem::path& path);

/// Joins a store with labels into training rows; unlabeled candidates are skipped.
std::vector<LabeledFeatures> training_rows(const CandidateStore& store, const std::map<std::string, int>& labels);

}  // namespace topicmine::topicrank
