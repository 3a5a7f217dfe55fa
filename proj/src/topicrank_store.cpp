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

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "topicmine/common.hpp"
#include "topicmine/topicrank.hpp"

namespace topicmine::topicrank {

using nlohmann::json;

namespace {

bool strip_char(char c) { return text::is_space(c) || text::is_punct(c); }

json contribution_to_json(const KeyContribution& c) {
  return {{"mentions", c.mentions},
          {"title_mentions", c.title_mentions},
          {"type_histogram", c.type_histogram},
          {"surface_counts", c.surface_counts}};
}

KeyContribution contribution_from_json(const json& j) {
  KeyContribution c;
  c.mentions = j.at("mentions").get<std::int64_t>();
  c.title_mentions = j.at("title_mentions").get<std::int64_t>();
  c.type_histogram = j.at("type_histogram").get<std::vector<std::int64_t>>();
  c.surface_counts = j.at("surface_counts").get<std::map<std::string, std::int64_t>>();
  return c;
}

}  // namespace

std::optional<std::string> normalize_key(std::string_view surface) {
  std::size_t b = 0, e = surface.size();
  while (b < e && strip_char(surface[b])) ++b;
  while (e > b && strip_char(surface[e - 1])) --e;
  if (b == e) return std::nullopt;

  std::string out;
  bool pending_space = false;
  for (std::size_t i = b; i < e; ++i) {
    const char c = surface[i];
    if (text::is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += text::is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c;
  }
  return out;
}

CandidateStore::CandidateStore(std::size_t type_count) : type_count_(type_count) {
  if (type_count_ == 0) throw ContractError("candidate store needs at least one entity type");
}

bool CandidateStore::accumulate(std::string_view doc_id, std::span<const nertag::Mention> mentions) {
  if (ledger_.contains(doc_id)) return false;
  DocContribution contribution;
  for (const auto& m : mentions) {
    if (m.doc_id != doc_id) throw ContractError("mention from document '" + m.doc_id + "' passed for '" +
                                                std::string(doc_id) + "'");
    if (m.entity_type >= type_count_) throw ContractError("mention entity type out of range");
    auto key = normalize_key(m.surface);
    if (!key) continue;
    auto& c = contribution[*key];
    if (c.type_histogram.empty()) c.type_histogram.assign(type_count_, 0);
    c.mentions += 1;
    c.title_mentions += m.from_title ? 1 : 0;
    c.type_histogram[m.entity_type] += 1;
    c.surface_counts[m.surface] += 1;
  }
  auto [it, inserted] = ledger_.emplace(std::string(doc_id), std::move(contribution));
  apply(it->first, it->second, +1);
  return true;
}

bool CandidateStore::remove_document(std::string_view doc_id) {
  auto it = ledger_.find(doc_id);
  if (it == ledger_.end()) return false;
  apply(it->first, it->second, -1);
  ledger_.erase(it);
  return true;
}

bool CandidateStore::contains_document(std::string_view doc_id) const { return ledger_.contains(doc_id); }

void CandidateStore::merge(const CandidateStore& other) {
  if (other.type_count_ != type_count_) throw ContractError("cannot merge stores with different type sets");
  for (const auto& [doc_id, _] : other.ledger_) {
    if (ledger_.contains(doc_id)) throw ContractError("stores overlap on document '" + doc_id + "'");
  }
  for (const auto& [doc_id, contribution] : other.ledger_) {
    auto [it, inserted] = ledger_.emplace(doc_id, contribution);
    apply(it->first, it->second, +1);
  }
}

const TopicCandidate* CandidateStore::find(std::string_view key) const {
  auto it = candidates_.find(key);
  return it == candidates_.end() ? nullptr : &it->second;
}

void CandidateStore::apply(std::string_view doc_id, const DocContribution& contribution, int sign) {
  for (const auto& [key, part] : contribution) {
    auto it = candidates_.find(key);
    if (it == candidates_.end()) {
      if (sign < 0) throw std::logic_error("ledger references a missing candidate '" + key + "'");
      TopicCandidate fresh;
      fresh.key = key;
      fresh.type_histogram.assign(type_count_, 0);
      it = candidates_.emplace(key, std::move(fresh)).first;
    }
    TopicCandidate& c = it->second;
    c.ner_frequency += sign * part.mentions;
    c.title_frequency += sign * part.title_mentions;
    for (std::size_t t = 0; t < type_count_; ++t) c.type_histogram[t] += sign * part.type_histogram[t];
    for (const auto& [surface, n] : part.surface_counts) {
      auto& slot = c.surface_counts[surface];
      slot += sign * n;
      if (slot == 0) c.surface_counts.erase(surface);
    }
    if (sign > 0) {
      c.doc_ids.emplace(doc_id);
    } else {
      c.doc_ids.erase(std::string(doc_id));
    }
    c.document_frequency = static_cast<std::int64_t>(c.doc_ids.size());

    if (c.ner_frequency < 0 || c.title_frequency < 0) throw std::logic_error("candidate counter went negative");
    if (c.ner_frequency == 0) {
      candidates_.erase(it);
      continue;
    }
    refresh_derived(c);
  }
}

void CandidateStore::refresh_derived(TopicCandidate& c) {
  std::int64_t best = -1;
  for (const auto& [surface, n] : c.surface_counts) {
    if (n > best) {
      best = n;
      c.display_name = surface;
    }
  }
  c.entity_type = static_cast<std::size_t>(
      std::max_element(c.type_histogram.begin(), c.type_histogram.end()) - c.type_histogram.begin());
}

void CandidateStore::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "candidates.jsonl");
    if (!out) throw std::runtime_error("cannot write candidate snapshot in " + dir.string());
    for (const auto& [key, c] : candidates_) {
      out << json{{"key", c.key},
                  {"display_name", c.display_name},
                  {"entity_type", c.entity_type},
                  {"ner_frequency", c.ner_frequency},
                  {"document_frequency", c.document_frequency},
                  {"title_frequency", c.title_frequency},
                  {"doc_ids", c.doc_ids},
                  {"type_histogram", c.type_histogram},
                  {"surface_counts", c.surface_counts}}
                 .dump()
          << '\n';
    }
  }
  std::ofstream out(dir / "ledger.jsonl");
  if (!out) throw std::runtime_error("cannot write candidate ledger in " + dir.string());
  out << json{{"type_count", type_count_}}.dump() << '\n';
  for (const auto& [doc_id, contribution] : ledger_) {
    json keys = json::object();
    for (const auto& [key, part] : contribution) keys[key] = contribution_to_json(part);
    out << json{{"doc_id", doc_id}, {"keys", keys}}.dump() << '\n';
  }
}

CandidateStore CandidateStore::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "ledger.jsonl");
  if (!in) throw std::runtime_error("cannot open candidate ledger in " + dir.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty candidate ledger");
  CandidateStore store(json::parse(line).at("type_count").get<std::size_t>());
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const json j = json::parse(line);
    DocContribution contribution;
    for (const auto& [key, part] : j.at("keys").items()) contribution[key] = contribution_from_json(part);
    auto [it, inserted] = store.ledger_.emplace(j.at("doc_id").get<std::string>(), std::move(contribution));
    if (!inserted) throw std::runtime_error("duplicate document in candidate ledger: " + it->first);
    store.apply(it->first, it->second, +1);
  }

  std::ifstream snap(dir / "candidates.jsonl");
  if (snap) {
    std::size_t count = 0;
    while (std::getline(snap, line)) {
      if (text::trim(line).empty()) continue;
      ++count;
      const json j = json::parse(line);
      const auto* c = store.find(j.at("key").get<std::string>());
      if (!c || c->ner_frequency != j.at("ner_frequency").get<std::int64_t>() ||
          c->document_frequency != j.at("document_frequency").get<std::int64_t>() ||
          c->title_frequency != j.at("title_frequency").get<std::int64_t>()) {
        throw std::runtime_error("candidate snapshot disagrees with ledger at key " + j.at("key").dump());
      }
    }
    if (count != store.size()) throw std::runtime_error("candidate snapshot size disagrees with ledger");
  }
  return store;
}

std::vector<std::string> shortlist(const CandidateStore& store, std::size_t n) {
  if (n == 0) throw ContractError("shortlist size must be at least 1");
  std::vector<const TopicCandidate*> all;
  all.reserve(store.size());
  for (const auto& [key, c] : store.candidates()) all.push_back(&c);
  const std::size_t keep = std::min(n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    [](const TopicCandidate* a, const TopicCandidate* b) {
                      if (a->ner_frequency != b->ner_frequency) return a->ner_frequency > b->ner_frequency;
                      return a->key < b->key;
                    });
  std::vector<std::string> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(all[i]->key);
  return out;
}

}  // namespace topicmine::topicrank
