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
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "topicmine/cardbuild.hpp"
#include "topicmine/common.hpp"
#include "topicmine/topicrank.hpp"

namespace topicmine::cardbuild {

using nlohmann::json;

namespace {

std::string_view strip_punct(std::string_view w) {
  while (!w.empty() && text::is_punct(w.front())) w.remove_prefix(1);
  while (!w.empty() && text::is_punct(w.back())) w.remove_suffix(1);
  return w;
}

std::set<std::string> trigrams(std::string_view s) {
  if (s.size() < 3) return {std::string(s)};
  std::set<std::string> out;
  for (std::size_t i = 0; i + 3 <= s.size(); ++i) out.emplace(s.substr(i, 3));
  return out;
}

template <class T>
double jaccard(const std::set<T>& a, const std::set<T>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& x : a) common += b.contains(x) ? 1 : 0;
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

std::optional<Eigen::VectorXd> unit_vector(const EmbeddingSpace& space, std::string_view key) {
  const auto row = space.topic_row(key);
  if (!row) return std::nullopt;
  Eigen::VectorXd v = space.topic_vectors.row(static_cast<Eigen::Index>(*row)).transpose();
  const double n = v.norm();
  if (n > 0.0) v /= n;
  return v;
}

bool acronym_pair(std::string_view a, std::string_view b, std::span<const AcronymAlias> acronyms) {
  for (const auto& alias : acronyms) {
    const auto lf = topicrank::normalize_key(alias.long_form);
    const auto ac = topicrank::normalize_key(alias.acronym);
    if (!lf || !ac) continue;
    if ((*lf == a && *ac == b) || (*lf == b && *ac == a)) return true;
  }
  return false;
}

bool checks_pass(const ConflationTopic& a, const ConflationTopic& b, std::span<const AcronymAlias> acronyms,
                 const ConflationConfig& config) {
  return acronym_pair(a.key, b.key, acronyms) || trigram_jaccard(a.key, b.key) >= config.name_jaccard ||
         jaccard(a.doc_ids, b.doc_ids) >= config.doc_jaccard;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

json related_json(const std::vector<Related>& list) {
  json out = json::array();
  for (const auto& r : list) out.push_back({{"id", r.id}, {"score", r.score}});
  return out;
}

std::vector<Related> related_from(const json& j) {
  std::vector<Related> out;
  for (const auto& r : j) out.push_back({r.at("id").get<std::string>(), r.at("score").get<double>()});
  return out;
}

}  // namespace

std::vector<AcronymAlias> extract_acronym_aliases(std::string_view sentence) {
  std::vector<AcronymAlias> out;
  std::size_t open = sentence.find('(');
  while (open != std::string_view::npos) {
    const std::size_t close = sentence.find(')', open + 1);
    if (close == std::string_view::npos) break;
    const std::string_view acr = sentence.substr(open + 1, close - open - 1);
    const bool shaped = acr.size() >= 2 && acr.size() <= 6 && std::all_of(acr.begin(), acr.end(), text::is_upper);
    if (shaped) {
      const auto words = text::split_ws(sentence.substr(0, open));
      if (words.size() >= acr.size()) {
        std::vector<std::string> long_form;
        bool ok = true;
        for (std::size_t k = 0; k < acr.size() && ok; ++k) {
          const std::string_view w = strip_punct(words[words.size() - acr.size() + k]);
          ok = !w.empty() && text::is_upper(w.front()) && w.front() == acr[k];
          long_form.emplace_back(w);
        }
        if (ok) out.push_back({text::join(long_form, " "), std::string(acr)});
      }
    }
    open = sentence.find('(', close + 1);
  }
  return out;
}

double trigram_jaccard(std::string_view a, std::string_view b) { return jaccard(trigrams(a), trigrams(b)); }

bool should_conflate(const EmbeddingSpace& space, const ConflationTopic& a, const ConflationTopic& b, double tau,
                     std::span<const AcronymAlias> acronyms, const ConflationConfig& config) {
  if (a.key == b.key) return false;
  const auto va = unit_vector(space, a.key);
  const auto vb = unit_vector(space, b.key);
  if (!va || !vb) return false;
  const double rel = relatedness(*va, *vb);
  return rel > 0.0 && rel >= tau && checks_pass(a, b, acronyms, config);
}

ConflationResult conflate(const EmbeddingSpace& space, std::span<const ConflationTopic> topics,
                          std::span<const AcronymAlias> acronyms, const ConflationConfig& config) {
  const std::size_t n = topics.size();
  std::vector<std::optional<Eigen::VectorXd>> unit(n);
  for (std::size_t i = 0; i < n; ++i) unit[i] = unit_vector(space, topics[i].key);

  ConflationResult out;
  if (config.tau) {
    out.tau = *config.tau;
  } else {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (unit[i] && unit[j]) best = std::max(best, unit[i]->dot(*unit[j]));
      }
    }
    out.tau = std::isfinite(best) ? config.tau_fraction * best : 0.0;
  }

  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!unit[i] || !unit[j] || topics[i].key == topics[j].key) continue;
      const double rel = unit[i]->dot(*unit[j]);
      if (rel > 0.0 && rel >= out.tau && checks_pass(topics[i], topics[j], acronyms, config)) uf.unite(i, j);
    }
  }

  std::map<std::size_t, std::size_t> head;  // root -> canonical member
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = uf.find(i);
    auto [it, fresh] = head.emplace(root, i);
    if (fresh) continue;
    const auto& cur = topics[it->second];
    if (topics[i].ner_frequency > cur.ner_frequency ||
        (topics[i].ner_frequency == cur.ner_frequency && topics[i].key < cur.key)) {
      it->second = i;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& canon = topics[head.at(uf.find(i))].key;
    out.canonical[topics[i].key] = canon;
    auto& list = out.aliases[canon];
    if (topics[i].key != canon) list.push_back(topics[i].key);
  }
  for (auto& [k, list] : out.aliases) std::sort(list.begin(), list.end());
  return out;
}

TopicCard build_card(const CardRequest& request, const EmbeddingSpace& space) {
  TopicCard card;
  card.key = request.key;
  card.display_name = request.display_name.empty() ? request.key : request.display_name;

  std::set<std::string> aliases(request.aliases.begin(), request.aliases.end());
  aliases.erase(request.key);
  aliases.erase(card.display_name);
  card.aliases.assign(aliases.begin(), aliases.end());

  std::vector<const defmine::DefinitionRecord*> defs;
  for (const auto& d : request.definitions) {
    if (d.category == defmine::DefinitionCategory::Sufficient) defs.push_back(&d);
  }
  std::stable_sort(defs.begin(), defs.end(), [](const auto* a, const auto* b) {
    if (a->confidence != b->confidence) return a->confidence > b->confidence;
    if (a->doc_id != b->doc_id) return a->doc_id < b->doc_id;
    return a->sentence_index < b->sentence_index;
  });
  std::set<std::string> seen_sentences;
  for (const auto* d : defs) {
    if (card.definitions.size() == kMaxCardDefinitions) break;
    if (!seen_sentences.insert(d->sentence).second) continue;
    card.definitions.push_back({d->sentence, d->doc_id, d->sentence_index, d->confidence});
  }

  if (request.k == 0 || !space.topic_row(request.key)) return card;

  std::set<std::string> used = {request.key};
  for (const auto& r : top_k_related(space, request.key, EntityKind::topic, space.topic_ids.size())) {
    std::string id = r.id;
    if (request.canonical) {
      const auto it = request.canonical->find(id);
      if (it != request.canonical->end()) id = it->second;
    }
    if (!used.insert(id).second) continue;
    card.related_topics.push_back({id, r.score});
    if (card.related_topics.size() == request.k) break;
  }

  card.related_people = top_k_related(space, request.key, EntityKind::user, request.k);

  // Embedding recall over a wider pool, then signal reranking.
  auto pool = top_k_related(space, request.key, EntityKind::doc, 2 * request.k);
  if (request.signals && !pool.empty()) {
    std::vector<RerankSignals> signals;
    for (const auto& c : pool) signals.push_back(request.signals(c.id));
    pool = rerank_related_docs(pool, signals, request.weights);
  }
  if (pool.size() > request.k) pool.resize(request.k);
  card.related_docs = std::move(pool);
  return card;
}

std::string card_to_json(const TopicCard& card) {
  json defs = json::array();
  for (const auto& d : card.definitions) {
    defs.push_back({{"sentence", d.sentence},
                    {"doc_id", d.doc_id},
                    {"sentence_index", d.sentence_index},
                    {"confidence", d.confidence}});
  }
  const json j = {{"key", card.key},
                  {"display_name", card.display_name},
                  {"aliases", card.aliases},
                  {"definitions", defs},
                  {"related_topics", related_json(card.related_topics)},
                  {"related_docs", related_json(card.related_docs)},
                  {"related_people", related_json(card.related_people)}};
  return j.dump(2);
}

TopicCard card_from_json(std::string_view json_text) {
  const json j = json::parse(json_text);
  TopicCard card;
  card.key = j.at("key").get<std::string>();
  card.display_name = j.at("display_name").get<std::string>();
  card.aliases = j.at("aliases").get<std::vector<std::string>>();
  for (const auto& d : j.at("definitions")) {
    card.definitions.push_back({d.at("sentence").get<std::string>(), d.at("doc_id").get<std::string>(),
                                d.at("sentence_index").get<std::size_t>(), d.at("confidence").get<double>()});
  }
  card.related_topics = related_from(j.at("related_topics"));
  card.related_docs = related_from(j.at("related_docs"));
  card.related_people = related_from(j.at("related_people"));
  return card;
}

}  // namespace topicmine::cardbuild
