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
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "topicmine/defmine.hpp"

namespace topicmine::cardbuild {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// idf * tf (k1 + 1) / (tf + k1 (1 - b + b dl / avgdl)), idf = ln(1 + (N - df + 0.5) / (df + 0.5)).
double bm25_weight(std::int64_t tf, std::int64_t dl, double avgdl, std::int64_t df, std::int64_t n_docs,
                   const Bm25Params& params);

/// Per-document term statistics feeding the matrix.
struct DocStats {
  std::string doc_id;
  std::int64_t length = 0;  // tokens
  std::map<std::string, std::int64_t> term_counts;  // topic key -> mention count
};

/// Compressed sparse columns: one column per document.
class SparseTopicDocMatrix {
 public:
  SparseTopicDocMatrix() = default;
  SparseTopicDocMatrix(std::vector<std::string> topic_keys, std::vector<std::string> doc_ids);

  std::size_t n_topics() const { return topic_keys_.size(); }
  std::size_t n_docs() const { return doc_ids_.size(); }
  std::size_t nonzeros() const { return values_.size(); }

  const std::vector<std::string>& topic_keys() const { return topic_keys_; }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  std::optional<std::size_t> topic_index(std::string_view key) const;
  std::optional<std::size_t> doc_index(std::string_view doc_id) const;

  /// Columns must be appended in order; rows within a column strictly increasing.
  void append_column(std::span<const std::pair<std::size_t, double>> entries);

  std::span<const std::uint32_t> column_rows(std::size_t j) const;
  std::span<const double> column_values(std::size_t j) const;
  /// 0 when absent.
  double at(std::size_t i, std::size_t j) const;

  Eigen::MatrixXd to_dense() const;
  static SparseTopicDocMatrix from_dense(const Eigen::MatrixXd& m);

 private:
  std::vector<std::string> topic_keys_;
  std::vector<std::string> doc_ids_;
  std::map<std::string, std::size_t, std::less<>> topic_pos_;
  std::map<std::string, std::size_t, std::less<>> doc_pos_;
  std::vector<std::size_t> col_ptr_{0};
  std::vector<std::uint32_t> rows_;
  std::vector<double> values_;
};

/// One row per topic that occurs in at least one document (others are
/// reported in `warnings`), one column per document in input order.
SparseTopicDocMatrix build_matrix(std::span<const std::string> topic_keys, std::span<const DocStats> docs,
                                  const Bm25Params& params, std::vector<std::string>* warnings = nullptr);

struct SvdConfig {
  std::size_t rank = 64;
  std::size_t oversample = 10;
  std::size_t power_iterations = 2;
  std::size_t batch_size = 1024;
  std::uint64_t memory_budget = 512ull << 20;
  std::uint64_t seed = 29;
};

/// Byte accounting for the factorization working set.
class MemoryLedger {
 public:
  explicit MemoryLedger(std::uint64_t budget) : budget_(budget) {}
  void acquire(std::uint64_t bytes);
  void release(std::uint64_t bytes);
  std::uint64_t current() const { return current_; }
  std::uint64_t peak() const { return peak_; }
  std::uint64_t budget() const { return budget_; }

 private:
  std::uint64_t budget_;
  std::uint64_t current_ = 0;
  std::uint64_t peak_ = 0;
};

class BudgetError : public std::runtime_error {
 public:
  BudgetError(std::uint64_t minimum, std::uint64_t budget);
  std::uint64_t minimum() const { return minimum_; }

 private:
  std::uint64_t minimum_;
};

/// Bytes needed with the given batch size (input matrix excluded).
std::uint64_t svd_working_bytes(std::size_t n_topics, std::size_t n_docs, const SvdConfig& config,
                                std::size_t batch_size);

struct SvdResult {
  Eigen::MatrixXd topic_vectors;  // n_topics x r, U sqrt(sigma)
  Eigen::MatrixXd doc_vectors;    // n_docs x r, V sqrt(sigma)
  Eigen::VectorXd singular_values;
  std::size_t batch_size = 0;  // after shrinking to the budget
  std::uint64_t peak_bytes = 0;
  std::size_t passes = 0;  // sweeps over the document columns
};

/// Streaming randomized range finder over document batches. The Gaussian test
/// matrix row for document j depends only on (seed, j), and all
/// accumulations run in column order, so results do not depend on the batch
/// size. The projected factor is folded into an (r+p)^2 triangular factor by
/// Givens row updates, and doc vectors come from a final projection pass.
SvdResult batched_randomized_svd(const SparseTopicDocMatrix& m, const SvdConfig& config);

struct EmbeddingSpace {
  std::size_t dimension = 0;
  std::vector<std::string> topic_ids, doc_ids, user_ids;
  Eigen::MatrixXd topic_vectors, doc_vectors, user_vectors;
  Eigen::VectorXd singular_values;

  std::optional<std::size_t> topic_row(std::string_view id) const;
  std::optional<std::size_t> doc_row(std::string_view id) const;
  std::optional<std::size_t> user_row(std::string_view id) const;
};

EmbeddingSpace make_space(const SparseTopicDocMatrix& m, const SvdResult& svd);

/// Mean of the given doc rows; nullopt for an empty list.
std::optional<Eigen::VectorXd> user_embedding(std::span<const std::size_t> doc_rows, const Eigen::MatrixXd& doc_vectors);

/// Adds one row per user with at least one embedded authored document.
void add_users(EmbeddingSpace& space, const std::map<std::string, std::vector<std::string>>& authored_docs);

double relatedness(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

enum class EntityKind { topic, doc, user };

struct Related {
  std::string id;
  double score = 0.0;

  bool operator==(const Related&) const = default;
};

/// Highest dot products against the query topic, descending, ties by id; the
/// query itself is skipped for kind == topic. Unknown query gives empty.
std::vector<Related> top_k_related(const EmbeddingSpace& space, std::string_view topic, EntityKind kind,
                                   std::size_t k);

struct RerankSignals {
  double bm25 = 0.0;
  bool in_title = false;
  std::int64_t timestamp = 0;
};

struct RerankWeights {
  double bm25 = 1.0;
  double title = 0.5;
  double recency = 0.2;
};

/// Stable sort by bm25/max + title + recency (timestamps min-max scaled over
/// the candidates). Scores in the output are the combined scores.
std::vector<Related> rerank_related_docs(std::span<const Related> candidates, std::span<const RerankSignals> signals,
                                         const RerankWeights& weights = {});

struct AcronymAlias {
  std::string long_form;
  std::string acronym;

  auto operator<=>(const AcronymAlias&) const = default;
};

/// "Long Form (LF)" where LF is 2-6 uppercase letters, each the initial of
/// the capitalized words right before the parenthesis.
std::vector<AcronymAlias> extract_acronym_aliases(std::string_view sentence);

/// Jaccard of character trigram sets (strings shorter than 3 count as one gram).
double trigram_jaccard(std::string_view a, std::string_view b);

struct ConflationConfig {
  double tau_fraction = 0.6;  // of the max normalized topic-topic relatedness
  std::optional<double> tau;  // absolute override
  double name_jaccard = 0.4;
  double doc_jaccard = 0.3;
};

struct ConflationTopic {
  std::string key;
  std::int64_t ner_frequency = 0;
  std::set<std::string> doc_ids;
};

struct ConflationResult {
  double tau = 0.0;
  std::map<std::string, std::string> canonical;  // every input key -> its canonical key
  std::map<std::string, std::vector<std::string>> aliases;  // canonical -> merged keys (sorted)
};

/// Normalized-vector relatedness >= tau plus one passing check (acronym pair,
/// name trigram Jaccard, doc-set Jaccard); components via union-find, the
/// highest ner_frequency member (ties: smallest key) is canonical.
ConflationResult conflate(const EmbeddingSpace& space, std::span<const ConflationTopic> topics,
                          std::span<const AcronymAlias> acronyms, const ConflationConfig& config = {});

/// Pair form of the merge test with an explicit threshold.
bool should_conflate(const EmbeddingSpace& space, const ConflationTopic& a, const ConflationTopic& b, double tau,
                     std::span<const AcronymAlias> acronyms, const ConflationConfig& config = {});

struct CardDefinition {
  std::string sentence;
  std::string doc_id;
  std::size_t sentence_index = 0;
  double confidence = 0.0;

  bool operator==(const CardDefinition&) const = default;
};

struct TopicCard {
  std::string key;
  std::string display_name;
  std::vector<std::string> aliases;
  std::vector<CardDefinition> definitions;
  std::vector<Related> related_topics;
  std::vector<Related> related_docs;
  std::vector<Related> related_people;

  bool operator==(const TopicCard&) const = default;
};

struct CardRequest {
  std::string key;  // canonical
  std::string display_name;
  std::vector<std::string> aliases;
  std::vector<defmine::DefinitionRecord> definitions;  // any category; only Sufficient kept
  std::size_t k = 10;
  const std::map<std::string, std::string>* canonical = nullptr;  // folds related topics onto canonical keys
  std::function<RerankSignals(const std::string& doc_id)> signals;  // for the card's topic
  RerankWeights weights;
};

inline constexpr std::size_t kMaxCardDefinitions = 3;

TopicCard build_card(const CardRequest& request, const EmbeddingSpace& space);

std::string card_to_json(const TopicCard& card);
TopicCard card_from_json(std::string_view json_text);

/// <stem>.bin per kind: u64 rows, u64 dim, u32 kind, then row-major
/// little-endian doubles; ids go to a shared JSON index.
void write_embeddings(const EmbeddingSpace& space, const std::filesystem::path& dir);
EmbeddingSpace read_embeddings(const std::filesystem::path& dir);

}  // namespace topicmine::cardbuild
