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
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "topicmine/cardbuild.hpp"
#include "topicmine/corpus.hpp"
#include "topicmine/defmine.hpp"
#include "topicmine/nertag.hpp"
#include "topicmine/topicrank.hpp"

namespace topicmine::pipeline {

/// Bad or unreadable configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stage failed; `stage()` names it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineConfig {
  std::filesystem::path corpus;
  std::vector<std::string> entity_types = nertag::LabelSet::defaults().types();

  // Token scores come from a trained model or an external score file.
  std::filesystem::path tagger_model;
  std::filesystem::path score_file;

  std::filesystem::path ranker_model;  // empty: rank by NER frequency
  std::filesystem::path classifier_model;  // empty: rule-based
  std::filesystem::path patterns_file;
  std::filesystem::path negative_lexicon;
  std::filesystem::path positive_lexicon;
  std::filesystem::path abbreviations_file;

  std::size_t top_n = 1000;
  std::size_t top_k = 200;
  double min_score = 0.5;
  std::size_t card_k = 10;

  cardbuild::Bm25Params bm25;
  cardbuild::SvdConfig svd;
  cardbuild::ConflationConfig conflation;
  cardbuild::RerankWeights rerank;

  std::filesystem::path out_dir;
  std::uint64_t seed = 29;
  std::optional<std::int64_t> created_at;  // manifest timestamp; now when unset

  /// Throws ConfigError.
  void validate() const;
  /// Stable hash of every setting that can change the output.
  std::string hash() const;
};

/// Models and resources a run needs, loaded once from a config.
struct Components {
  nertag::LabelSet labels = nertag::LabelSet::defaults();
  std::optional<nertag::TaggerModel> tagger;
  std::map<std::pair<std::string, std::size_t>, nertag::ScoreMatrix> external_scores;
  std::optional<topicrank::GbdtModel> ranker;
  defmine::SentenceClassifier classifier = defmine::SentenceClassifier::rule_based();
  std::vector<defmine::DefinitionPattern> patterns = defmine::default_patterns();
  defmine::OpinionLexicon lexicon = defmine::OpinionLexicon::defaults();
  corpus::AbbreviationList abbreviations = corpus::AbbreviationList::defaults();
};

/// Throws ConfigError.
Components load_components(const PipelineConfig& config);

/// What one document contributed besides its mention counters.
struct DocAnalysis {
  std::int64_t length = 0;  // tokens over all sentences
  std::string author_id;
  std::int64_t timestamp = 0;
  std::vector<defmine::DefinitionRecord> definitions;
  std::vector<cardbuild::AcronymAlias> acronyms;

  bool operator==(const DocAnalysis&) const = default;
};

struct PipelineState {
  explicit PipelineState(std::size_t type_count = nertag::LabelSet::defaults().type_count()) : store(type_count) {}

  std::map<std::string, corpus::Document> documents;
  std::map<std::string, DocAnalysis> analyses;
  topicrank::CandidateStore store;
  topicrank::RankedTopicList ranked;
  std::vector<std::string> warnings;

  void save(const std::filesystem::path& dir) const;
  static PipelineState load(const std::filesystem::path& dir);

  bool operator==(const PipelineState& o) const {
    return documents == o.documents && analyses == o.analyses && store == o.store && ranked == o.ranked;
  }
};

struct UpdateEvent {
  enum class Kind { upsert, remove };
  Kind kind = Kind::upsert;
  corpus::Document document;  // upsert
  std::string doc_id;  // remove

  static UpdateEvent upsert(corpus::Document d) { return {Kind::upsert, std::move(d), {}}; }
  static UpdateEvent remove(std::string id) { return {Kind::remove, {}, std::move(id)}; }
};

/// JSONL: {"op": "upsert", "document": {...}} or {"op": "delete", "doc_id": ...}.
std::vector<UpdateEvent> load_events(const std::filesystem::path& path);

/// Sentences, tokens, mentions and definitions of one document.
struct ProcessedDocument {
  std::vector<nertag::Mention> mentions;
  DocAnalysis analysis;
};

ProcessedDocument process_document(const corpus::Document& doc, const Components& components,
                                   std::vector<std::string>* warnings = nullptr);

/// Upserts replace the document's earlier contributions (identical content is
/// a no-op); deletes drop counters, definitions and text. Unknown deletes only
/// warn. Returns true when the state changed.
bool apply_update(PipelineState& state, const UpdateEvent& event, const Components& components);

/// Shortlist plus rerank on the current counters.
const topicrank::RankedTopicList& rank_refresh(PipelineState& state, const PipelineConfig& config,
                                               const Components& components);

struct Manifest {
  std::string run_id;
  std::string config_hash;
  std::string corpus_snapshot_id;
  std::int64_t created_at = 0;
  std::size_t document_count = 0;
  std::vector<std::string> warnings;
};

struct KnowledgeBase {
  std::vector<cardbuild::TopicCard> cards;
  cardbuild::EmbeddingSpace space;
  Manifest manifest;
};

/// Hash over (doc_id, content) pairs of the current documents.
std::string corpus_snapshot_id(const PipelineState& state);

/// Matrix, factorization, users, conflation and cards from the ranked list.
KnowledgeBase build_kb(const PipelineState& state, const PipelineConfig& config);

struct RunResult {
  PipelineState state;
  KnowledgeBase kb;
};

/// ingest -> per-document analysis -> rank -> cards -> export (when out_dir is
/// set). Stage failures throw StageError and leave no partial output.
RunResult run_full(const PipelineConfig& config, const Components& components);

/// Percent-encodes everything outside [A-Za-z0-9-_.~].
std::string encode_key(std::string_view key);
std::string decode_key(std::string_view encoded);

/// manifest.json, cards/<encoded key>.json and embeddings/, replacing `dir`
/// as a whole.
void export_kb(const KnowledgeBase& kb, const std::filesystem::path& dir);

}  // namespace topicmine::pipeline
