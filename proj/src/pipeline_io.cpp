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

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "topicmine/common.hpp"
#include "topicmine/pipeline.hpp"

namespace topicmine::pipeline {

using nlohmann::json;

namespace {

json document_json(const corpus::Document& d) {
  return {{"doc_id", d.doc_id}, {"title", d.title},         {"body", d.body},
          {"author_id", d.author_id}, {"timestamp", d.timestamp}, {"deleted", d.deleted}};
}

json definition_json(const defmine::DefinitionRecord& r) {
  return {{"topic_key", r.topic_key},
          {"topic_surface", r.topic_surface},
          {"sentence", r.sentence},
          {"description", r.description},
          {"doc_id", r.doc_id},
          {"sentence_index", r.sentence_index},
          {"category", defmine::category_name(r.category)},
          {"pattern_id", r.pattern_id},
          {"confidence", r.confidence}};
}

defmine::DefinitionRecord definition_from(const json& j) {
  defmine::DefinitionRecord r;
  r.topic_key = j.at("topic_key").get<std::string>();
  r.topic_surface = j.at("topic_surface").get<std::string>();
  r.sentence = j.at("sentence").get<std::string>();
  r.description = j.at("description").get<std::string>();
  r.doc_id = j.at("doc_id").get<std::string>();
  r.sentence_index = j.at("sentence_index").get<std::size_t>();
  r.category = defmine::parse_category(j.at("category").get<std::string>());
  r.pattern_id = j.at("pattern_id").get<std::string>();
  r.confidence = j.at("confidence").get<double>();
  return r;
}

void write_text(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + p.string());
}

std::vector<json> read_jsonl(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw std::runtime_error(p.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

void PipelineState::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::string docs, analyses_text;
  for (const auto& [id, d] : documents) docs += document_json(d).dump() + '\n';
  for (const auto& [id, a] : analyses) {
    json defs = json::array(), acr = json::array();
    for (const auto& r : a.definitions) defs.push_back(definition_json(r));
    for (const auto& x : a.acronyms) acr.push_back({x.long_form, x.acronym});
    analyses_text += json{{"doc_id", id},          {"length", a.length},     {"author_id", a.author_id},
                          {"timestamp", a.timestamp}, {"definitions", defs}, {"acronyms", acr}}
                         .dump() +
                     '\n';
  }
  write_text(dir / "documents.jsonl", docs);
  write_text(dir / "analyses.jsonl", analyses_text);
  std::filesystem::remove_all(dir / "store");
  store.save(dir / "store");
  json entries = json::array();
  for (const auto& e : ranked.entries) entries.push_back({{"key", e.key}, {"score", e.score}});
  write_text(dir / "ranked.json", json{{"entries", entries},
                                       {"shortlist_size", ranked.shortlist_size},
                                       {"top_k", ranked.top_k},
                                       {"min_score", ranked.min_score},
                                       {"warnings", warnings}}
                                          .dump(2) +
                                      '\n');
}

PipelineState PipelineState::load(const std::filesystem::path& dir) {
  auto store = topicrank::CandidateStore::load(dir / "store");
  PipelineState s(store.type_count());
  s.store = std::move(store);
  for (const auto& j : read_jsonl(dir / "documents.jsonl")) {
    auto d = corpus::parse_document(j.dump());
    const std::string id = d.doc_id;
    s.documents.emplace(id, std::move(d));
  }
  for (const auto& j : read_jsonl(dir / "analyses.jsonl")) {
    DocAnalysis a;
    a.length = j.at("length").get<std::int64_t>();
    a.author_id = j.at("author_id").get<std::string>();
    a.timestamp = j.at("timestamp").get<std::int64_t>();
    for (const auto& r : j.at("definitions")) a.definitions.push_back(definition_from(r));
    for (const auto& x : j.at("acronyms")) a.acronyms.push_back({x.at(0).get<std::string>(), x.at(1).get<std::string>()});
    s.analyses.emplace(j.at("doc_id").get<std::string>(), std::move(a));
  }
  for (const auto& [id, a] : s.analyses) {
    if (!s.documents.contains(id)) throw std::runtime_error("state analysis for unknown document " + id);
  }
  std::ifstream in(dir / "ranked.json");
  if (!in) throw std::runtime_error("cannot open " + (dir / "ranked.json").string());
  const json r = json::parse(in);
  for (const auto& e : r.at("entries")) s.ranked.entries.push_back({e.at("key").get<std::string>(), e.at("score").get<double>()});
  s.ranked.shortlist_size = r.at("shortlist_size").get<std::size_t>();
  s.ranked.top_k = r.at("top_k").get<std::size_t>();
  s.ranked.min_score = r.at("min_score").get<double>();
  s.warnings = r.at("warnings").get<std::vector<std::string>>();
  return s;
}

std::vector<UpdateEvent> load_events(const std::filesystem::path& path) {
  std::vector<UpdateEvent> out;
  std::size_t n = 0;
  for (const auto& j : read_jsonl(path)) {
    ++n;
    const auto op = j.value("op", std::string());
    if (op == "upsert") {
      out.push_back(UpdateEvent::upsert(corpus::parse_document(j.at("document").dump())));
    } else if (op == "delete") {
      out.push_back(UpdateEvent::remove(j.at("doc_id").get<std::string>()));
    } else {
      throw std::runtime_error(path.string() + ": event " + std::to_string(n) + " has unknown op '" + op + "'");
    }
  }
  return out;
}

std::string encode_key(std::string_view key) {
  std::string out;
  for (unsigned char c : key) {
    if (text::is_alnum(static_cast<char>(c)) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

std::string decode_key(std::string_view encoded) {
  std::string out;
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    if (encoded[i] != '%') {
      out += encoded[i];
      continue;
    }
    if (i + 2 >= encoded.size()) throw std::invalid_argument("truncated escape in " + std::string(encoded));
    out += static_cast<char>(std::stoi(std::string(encoded.substr(i + 1, 2)), nullptr, 16));
    i += 2;
  }
  return out;
}

void export_kb(const KnowledgeBase& kb, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path target = fs::absolute(dir).lexically_normal();
  const fs::path parent = target.parent_path();
  const std::string name = target.filename().string();
  fs::create_directories(parent);
  const fs::path staging = parent / ("." + name + ".staging-" + kb.manifest.run_id);
  const fs::path previous = parent / ("." + name + ".previous-" + kb.manifest.run_id);

  try {
    fs::remove_all(staging);
    fs::create_directories(staging / "cards");
    json index = json::array();
    for (const auto& card : kb.cards) {
      const std::string file = "cards/" + encode_key(card.key) + ".json";
      write_text(staging / file, cardbuild::card_to_json(card) + '\n');
      index.push_back({{"key", card.key}, {"file", file}});
    }
    cardbuild::write_embeddings(kb.space, staging / "embeddings");
    const json manifest = {{"run_id", kb.manifest.run_id},
                           {"config_hash", kb.manifest.config_hash},
                           {"corpus_snapshot_id", kb.manifest.corpus_snapshot_id},
                           {"created_at", kb.manifest.created_at},
                           {"document_count", kb.manifest.document_count},
                           {"card_count", kb.cards.size()},
                           {"cards", index},
                           {"embeddings", "embeddings/embeddings_index.json"},
                           {"warnings", kb.manifest.warnings}};
    write_text(staging / "manifest.json", manifest.dump(2) + '\n');

    fs::remove_all(previous);
    const bool had_previous = fs::exists(target);
    if (had_previous) fs::rename(target, previous);
    try {
      fs::rename(staging, target);
    } catch (...) {
      if (had_previous) fs::rename(previous, target);
      throw;
    }
    fs::remove_all(previous);
  } catch (const std::exception& e) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw std::runtime_error("export to " + target.string() + " failed: " + e.what());
  }
}

}  // namespace topicmine::pipeline
