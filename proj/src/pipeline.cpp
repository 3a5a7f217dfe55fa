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

#include "topicmine/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "topicmine/common.hpp"

namespace topicmine::pipeline {

using nlohmann::json;

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t file_digest(const std::filesystem::path& p) {
  if (p.empty()) return 0;
  std::ifstream in(p, std::ios::binary);
  if (!in) return 0;
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a(bytes);
}

void require_readable(const std::filesystem::path& p, const char* what) {
  if (p.empty()) return;
  std::ifstream in(p);
  if (!in) throw ConfigError(std::string(what) + " is not readable: " + p.string());
}

template <class F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

std::int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

}  // namespace

StageError::StageError(std::string stage, const std::string& cause)
    : std::runtime_error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)) {}

void PipelineConfig::validate() const {
  if (top_n < top_k) throw ConfigError("top-n (" + std::to_string(top_n) + ") must be >= top-k (" +
                                       std::to_string(top_k) + ")");
  if (entity_types.empty()) throw ConfigError("at least one entity type is required");
  if (tagger_model.empty() == score_file.empty()) {
    throw ConfigError("set exactly one of tagger_model and score_file");
  }
  if (svd.rank < 1 || svd.batch_size < 1) throw ConfigError("svd rank and batch size must be >= 1");
  if (!(bm25.k1 > 0.0) || bm25.b < 0.0 || bm25.b > 1.0) throw ConfigError("bm25 needs k1 > 0 and b in [0, 1]");
  require_readable(corpus, "corpus");
  require_readable(tagger_model, "tagger model");
  require_readable(score_file, "score file");
  require_readable(ranker_model, "ranker model");
  require_readable(classifier_model, "classifier model");
  require_readable(patterns_file, "pattern file");
  require_readable(negative_lexicon, "negative lexicon");
  require_readable(positive_lexicon, "positive lexicon");
  require_readable(abbreviations_file, "abbreviation list");
  if (!positive_lexicon.empty() && negative_lexicon.empty()) {
    throw ConfigError("a positive lexicon needs a negative lexicon");
  }
}

std::string PipelineConfig::hash() const {
  const json j = {
      {"entity_types", entity_types},
      {"tagger_model", file_digest(tagger_model)},
      {"score_file", file_digest(score_file)},
      {"ranker_model", file_digest(ranker_model)},
      {"classifier_model", file_digest(classifier_model)},
      {"patterns_file", file_digest(patterns_file)},
      {"negative_lexicon", file_digest(negative_lexicon)},
      {"positive_lexicon", file_digest(positive_lexicon)},
      {"abbreviations_file", file_digest(abbreviations_file)},
      {"top_n", top_n},
      {"top_k", top_k},
      {"min_score", min_score},
      {"card_k", card_k},
      {"bm25", {bm25.k1, bm25.b}},
      {"svd", {svd.rank, svd.oversample, svd.power_iterations, svd.batch_size, svd.memory_budget}},
      {"conflation",
       {conflation.tau_fraction, conflation.tau.value_or(-1.0), conflation.name_jaccard, conflation.doc_jaccard}},
      {"rerank", {rerank.bm25, rerank.title, rerank.recency}},
      {"seed", seed}};
  return hex(fnv1a(j.dump()));
}

Components load_components(const PipelineConfig& config) {
  config.validate();
  Components c;
  try {
    c.labels = nertag::LabelSet(config.entity_types);
    if (!config.tagger_model.empty()) {
      c.tagger = nertag::TaggerModel::load(config.tagger_model);
      if (!(c.tagger->labels() == c.labels)) throw ConfigError("tagger model entity types differ from the configured set");
    }
    if (!config.score_file.empty()) {
      for (auto& s : nertag::load_score_file(config.score_file, c.labels)) {
        c.external_scores.emplace(std::make_pair(s.doc_id, s.sentence_index), std::move(s.scores));
      }
    }
    if (!config.ranker_model.empty()) c.ranker = topicrank::GbdtModel::load(config.ranker_model);
    if (!config.classifier_model.empty()) c.classifier = defmine::SentenceClassifier::load(config.classifier_model);
    if (!config.patterns_file.empty()) c.patterns = defmine::load_patterns(config.patterns_file);
    if (!config.negative_lexicon.empty()) {
      c.lexicon = defmine::OpinionLexicon::load(
          config.negative_lexicon,
          config.positive_lexicon.empty() ? std::nullopt : std::optional<std::filesystem::path>(config.positive_lexicon));
    }
    if (!config.abbreviations_file.empty()) c.abbreviations = corpus::AbbreviationList::load(config.abbreviations_file);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ProcessedDocument process_document(const corpus::Document& doc, const Components& components,
                                   std::vector<std::string>* warnings) {
  ProcessedDocument out;
  out.analysis.author_id = doc.author_id;
  out.analysis.timestamp = doc.timestamp;
  for (const auto& sentence : corpus::split_sentences(doc, components.abbreviations)) {
    const auto tokens = corpus::tokenize(sentence);
    out.analysis.length += static_cast<std::int64_t>(tokens.size());
    if (components.tagger) {
      auto mentions = nertag::tag_sentence(*components.tagger, sentence, tokens);
      std::move(mentions.begin(), mentions.end(), std::back_inserter(out.mentions));
    } else if (!tokens.empty()) {
      const auto it = components.external_scores.find({doc.doc_id, sentence.index});
      if (it == components.external_scores.end()) {
        if (warnings) warnings->push_back(doc.doc_id + "#" + std::to_string(sentence.index) + ": no token scores");
      } else if (it->second.rows() != tokens.size()) {
        if (warnings) {
          warnings->push_back(doc.doc_id + "#" + std::to_string(sentence.index) + ": score rows (" +
                              std::to_string(it->second.rows()) + ") do not match tokens (" +
                              std::to_string(tokens.size()) + ")");
        }
      } else {
        const auto labels = nertag::viterbi_decode(it->second, components.labels);
        auto mentions = nertag::extract_mentions(sentence, tokens, labels, components.labels, &it->second);
        std::move(mentions.begin(), mentions.end(), std::back_inserter(out.mentions));
      }
    }
    for (auto& a : cardbuild::extract_acronym_aliases(sentence.text)) out.analysis.acronyms.push_back(std::move(a));
  }
  out.analysis.definitions = defmine::mine_definitions(doc, components.classifier, components.patterns,
                                                       components.lexicon, components.abbreviations);
  return out;
}

bool apply_update(PipelineState& state, const UpdateEvent& event, const Components& components) {
  const bool removal = event.kind == UpdateEvent::Kind::remove || event.document.deleted;
  const std::string& id = event.kind == UpdateEvent::Kind::remove ? event.doc_id : event.document.doc_id;
  if (removal) {
    const auto it = state.documents.find(id);
    if (it == state.documents.end()) {
      state.warnings.push_back("delete of unknown document '" + id + "' ignored");
      return false;
    }
    state.store.remove_document(id);
    state.analyses.erase(id);
    state.documents.erase(it);
    return true;
  }
  if (const auto it = state.documents.find(id); it != state.documents.end() && it->second == event.document) {
    return false;
  }
  state.store.remove_document(id);
  auto processed = process_document(event.document, components, &state.warnings);
  state.store.accumulate(id, processed.mentions);
  state.analyses[id] = std::move(processed.analysis);
  state.documents[id] = event.document;
  return true;
}

const topicrank::RankedTopicList& rank_refresh(PipelineState& state, const PipelineConfig& config,
                                               const Components& components) {
  const auto keys = topicrank::shortlist(state.store, config.top_n);
  if (components.ranker) {
    state.ranked = topicrank::rerank_and_filter(keys, state.store, *components.ranker, config.top_k, config.min_score);
    return state.ranked;
  }
  topicrank::RankedTopicList list;
  list.shortlist_size = keys.size();
  list.top_k = config.top_k;
  for (std::size_t i = 0; i < keys.size() && i < config.top_k; ++i) {
    list.entries.push_back({keys[i], static_cast<double>(state.store.find(keys[i])->ner_frequency)});
  }
  state.ranked = std::move(list);
  return state.ranked;
}

std::string corpus_snapshot_id(const PipelineState& state) {
  std::uint64_t h = fnv1a("snapshot");
  for (const auto& [id, d] : state.documents) {
    const std::string record = id + '\x1f' + d.title + '\x1f' + d.body + '\x1f' + d.author_id + '\x1f' +
                               std::to_string(d.timestamp);
    h = splitmix64(h ^ fnv1a(record));
  }
  return hex(h);
}

KnowledgeBase build_kb(const PipelineState& state, const PipelineConfig& config) {
  KnowledgeBase kb;
  auto& warnings = kb.manifest.warnings;
  warnings = state.warnings;

  std::vector<std::string> topics;
  for (const auto& e : state.ranked.entries) topics.push_back(e.key);

  std::vector<cardbuild::DocStats> docs;
  std::map<std::string, std::vector<std::string>> authored;
  for (const auto& [id, analysis] : state.analyses) {
    cardbuild::DocStats s{id, analysis.length, {}};
    if (const auto it = state.store.ledger().find(id); it != state.store.ledger().end()) {
      for (const auto& [key, contrib] : it->second) s.term_counts[key] = contrib.mentions;
    }
    docs.push_back(std::move(s));
    if (!analysis.author_id.empty()) authored[analysis.author_id].push_back(id);
  }
  const auto matrix = cardbuild::build_matrix(topics, docs, config.bm25, &warnings);

  const std::size_t cap = std::min(matrix.n_topics(), matrix.n_docs());
  if (cap > 0) {
    auto svd_config = config.svd;
    svd_config.seed = config.seed;
    if (svd_config.rank + svd_config.oversample > cap) {
      const std::size_t l = cap;
      svd_config.rank = std::min(svd_config.rank, l);
      svd_config.oversample = l - svd_config.rank;
      warnings.push_back("svd rank reduced to " + std::to_string(svd_config.rank) + " (oversampling " +
                         std::to_string(svd_config.oversample) + ") for a " + std::to_string(matrix.n_topics()) +
                         "x" + std::to_string(matrix.n_docs()) + " matrix");
    }
    kb.space = cardbuild::make_space(matrix, cardbuild::batched_randomized_svd(matrix, svd_config));
    cardbuild::add_users(kb.space, authored);
  }

  std::set<cardbuild::AcronymAlias> acronym_set;
  for (const auto& [id, analysis] : state.analyses) acronym_set.insert(analysis.acronyms.begin(), analysis.acronyms.end());
  const std::vector<cardbuild::AcronymAlias> acronyms(acronym_set.begin(), acronym_set.end());

  std::vector<cardbuild::ConflationTopic> conflation_topics;
  for (const auto& key : matrix.topic_keys()) {
    const auto* c = state.store.find(key);
    conflation_topics.push_back({key, c->ner_frequency, c->doc_ids});
  }
  const auto merged = cardbuild::conflate(kb.space, conflation_topics, acronyms, config.conflation);

  std::map<std::string, std::vector<defmine::DefinitionRecord>> definitions;
  for (const auto& [id, analysis] : state.analyses) {
    for (const auto& d : analysis.definitions) {
      const auto it = merged.canonical.find(d.topic_key);
      if (it != merged.canonical.end()) definitions[it->second].push_back(d);
    }
  }

  for (const auto& key : topics) {
    const auto it = merged.canonical.find(key);
    if (it == merged.canonical.end() || it->second != key) continue;
    const auto* candidate = state.store.find(key);

    std::vector<std::string> members = {key};
    const auto& extra = merged.aliases.at(key);
    members.insert(members.end(), extra.begin(), extra.end());

    cardbuild::CardRequest req;
    req.key = key;
    req.display_name = candidate->display_name;
    for (const auto& m : members) {
      if (m != key) req.aliases.push_back(state.store.find(m)->display_name);
      for (const auto& a : acronyms) {
        if (topicrank::normalize_key(a.long_form) == m) req.aliases.push_back(a.acronym);
        if (topicrank::normalize_key(a.acronym) == m) req.aliases.push_back(a.long_form);
      }
    }
    if (const auto d = definitions.find(key); d != definitions.end()) req.definitions = d->second;
    req.k = config.card_k;
    req.canonical = &merged.canonical;
    req.weights = config.rerank;
    const auto row = matrix.topic_index(key);
    req.signals = [&, row](const std::string& doc_id) {
      cardbuild::RerankSignals s;
      const auto col = matrix.doc_index(doc_id);
      if (row && col) s.bm25 = matrix.at(*row, *col);
      if (const auto l = state.store.ledger().find(doc_id); l != state.store.ledger().end()) {
        if (const auto c = l->second.find(key); c != l->second.end()) s.in_title = c->second.title_mentions > 0;
      }
      if (const auto a = state.analyses.find(doc_id); a != state.analyses.end()) s.timestamp = a->second.timestamp;
      return s;
    };
    kb.cards.push_back(cardbuild::build_card(req, kb.space));
  }

  kb.manifest.config_hash = config.hash();
  kb.manifest.corpus_snapshot_id = corpus_snapshot_id(state);
  kb.manifest.run_id = hex(fnv1a(kb.manifest.config_hash + ":" + kb.manifest.corpus_snapshot_id));
  kb.manifest.created_at = config.created_at.value_or(now_seconds());
  kb.manifest.document_count = state.documents.size();
  return kb;
}

RunResult run_full(const PipelineConfig& config, const Components& components) {
  config.validate();
  if (config.corpus.empty()) throw ConfigError("no corpus configured");
  auto ingested = in_stage("ingest", [&] { return corpus::ingest_jsonl(config.corpus); });

  RunResult out{PipelineState(components.labels.type_count()), {}};
  for (const auto& e : ingested.errors) {
    out.state.warnings.push_back("corpus line " + std::to_string(e.line) + ": " + e.reason);
  }
  in_stage("analyze", [&] {
    for (auto& d : ingested.documents) {
      if (!d.deleted) apply_update(out.state, UpdateEvent::upsert(std::move(d)), components);
    }
    return 0;
  });
  in_stage("rank", [&] { return rank_refresh(out.state, config, components).entries.size(); });
  out.kb = in_stage("cards", [&] { return build_kb(out.state, config); });
  if (!config.out_dir.empty()) {
    in_stage("export", [&] {
      export_kb(out.kb, config.out_dir);
      return 0;
    });
  }
  return out;
}

}  // namespace topicmine::pipeline
