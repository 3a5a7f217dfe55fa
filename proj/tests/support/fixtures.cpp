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

#include "fixtures.hpp"

#include <cmath>

#include "topicmine/common.hpp"

namespace topicmine::testing {

using nertag::LabeledSentence;
using nertag::LabelSet;

namespace {

const std::vector<std::vector<std::string>> kPeople = {
    {"Grace", "Hopper"}, {"Alan", "Turing"}, {"Ada", "Lovelace"}, {"Edsger", "Dijkstra"}, {"Barbara", "Liskov"},
    {"Donald", "Knuth"}, {"Margaret", "Hamilton"}, {"Tim", "Berners-Lee"}};
const std::vector<std::vector<std::string>> kOrgs = {
    {"Contoso"}, {"Fabrikam", "Labs"}, {"Northwind", "Traders"}, {"Tailspin", "Toys"}, {"Litware"}, {"Adatum"}};
const std::vector<std::vector<std::string>> kPlaces = {{"Seattle"}, {"Redmond"}, {"Dublin"}, {"Prague"}, {"Nairobi"}};

void push_entity(LabeledSentence& s, const std::vector<std::string>& words, std::size_t type) {
  for (std::size_t k = 0; k < words.size(); ++k) {
    s.tokens.push_back(words[k]);
    s.labels.push_back(k == 0 ? LabelSet::begin(type) : LabelSet::inside(type));
  }
}

void push_plain(LabeledSentence& s, std::initializer_list<const char*> words) {
  for (const char* w : words) {
    s.tokens.emplace_back(w);
    s.labels.push_back(LabelSet::outside());
  }
}

}  // namespace

std::vector<LabeledSentence> separable_tagging_data(std::size_t count, std::uint64_t seed, const LabelSet& labels) {
  const std::size_t person = labels.type_index("person");
  const std::size_t org = labels.type_index("organization");
  const std::size_t loc = labels.type_index("location");
  Rng rng(seed);
  std::vector<LabeledSentence> out;
  for (std::size_t i = 0; i < count; ++i) {
    LabeledSentence s;
    switch (i % 4) {
      case 0:
        push_entity(s, kPeople[rng.index(kPeople.size())], person);
        push_plain(s, {"joined"});
        push_entity(s, kOrgs[rng.index(kOrgs.size())], org);
        push_plain(s, {"in"});
        push_entity(s, kPlaces[rng.index(kPlaces.size())], loc);
        push_plain(s, {"."});
        break;
      case 1:
        push_plain(s, {"the", "team", "at"});
        push_entity(s, kOrgs[rng.index(kOrgs.size())], org);
        push_plain(s, {"thanked"});
        push_entity(s, kPeople[rng.index(kPeople.size())], person);
        push_plain(s, {"."});
        break;
      case 2:
        push_plain(s, {"we", "flew", "to"});
        push_entity(s, kPlaces[rng.index(kPlaces.size())], loc);
        push_plain(s, {"with"});
        push_entity(s, kPeople[rng.index(kPeople.size())], person);
        push_plain(s, {"last", "week", "."});
        break;
      default:
        push_entity(s, kPeople[rng.index(kPeople.size())], person);
        push_plain(s, {"wrote", "a", "memo", "about", "the", "budget", "."});
        break;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabeledSentence> imbalanced_tagging_data(std::size_t count, double entity_rate, std::uint64_t seed,
                                                     const LabelSet& labels) {
  static const std::vector<std::string> kFiller = {
      "the", "report", "was", "reviewed", "by", "a", "group", "of", "analysts", "and", "then", "shared",
      "with", "our", "partners", "before", "launch", "Monday", "Budget", "Review", "notes", "on", "plans"};
  static const std::vector<std::string> kNames = {"Hopper", "Turing", "Lovelace", "Knuth", "Liskov",
                                                  "Dijkstra", "Hamilton", "Ritchie", "Kernighan", "Thompson"};
  const std::size_t person = labels.type_index("person");
  Rng rng(seed);
  std::vector<LabeledSentence> out;
  for (std::size_t i = 0; i < count; ++i) {
    LabeledSentence s;
    for (std::size_t t = 0; t < 20; ++t) {
      if (rng.uniform() < entity_rate) {
        s.tokens.push_back(kNames[rng.index(kNames.size())]);
        s.labels.push_back(LabelSet::begin(person));
      } else {
        s.tokens.push_back(kFiller[rng.index(kFiller.size())]);
        s.labels.push_back(LabelSet::outside());
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

nertag::ScoreMatrix turing_test_scores(const LabelSet& labels) {
  const std::size_t per = labels.type_index("person");
  const std::size_t wrk = labels.type_index("creative_work");
  nertag::ScoreMatrix m(3, labels.size(), -6.0);
  // "Turin": B-per narrowly ahead of B-wrk.
  m(0, LabelSet::begin(per)) = -0.9;
  m(0, LabelSet::begin(wrk)) = -1.0;
  m(0, LabelSet::outside()) = -2.5;
  // "##g": I-wrk ahead of I-per.
  m(1, LabelSet::inside(wrk)) = -0.4;
  m(1, LabelSet::inside(per)) = -1.6;
  m(1, LabelSet::outside()) = -2.0;
  // "Test": I-wrk clearly best.
  m(2, LabelSet::inside(wrk)) = -0.3;
  m(2, LabelSet::inside(per)) = -2.2;
  m(2, LabelSet::outside()) = -1.8;
  return m;
}

}  // namespace topicmine::testing

namespace topicmine::testing {

topicrank::TopicCandidate make_candidate(const std::string& key, std::int64_t ner, std::int64_t doc,
                                         std::int64_t title) {
  topicrank::TopicCandidate c;
  c.key = key;
  c.display_name = key;
  c.ner_frequency = ner;
  c.document_frequency = doc;
  c.title_frequency = title;
  for (std::int64_t i = 0; i < doc; ++i) c.doc_ids.insert(key + "#" + std::to_string(i));
  c.type_histogram.assign(8, 0);
  c.type_histogram[0] = ner;
  c.surface_counts[key] = ner;
  return c;
}

std::vector<topicrank::LabeledFeatures> ratio_labeled_rows(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<topicrank::LabeledFeatures> rows;
  for (std::size_t i = 0; i < count; ++i) {
    const int label = rng.uniform() < 0.5 ? 1 : 0;
    const auto ner = static_cast<std::int64_t>(std::round(std::exp(std::log(20.0) + rng.uniform() * std::log(250.0))));
    const double ratio = label ? 2.0 + 4.0 * rng.uniform() : 1.0 + 0.1 * rng.uniform();
    const auto doc = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(static_cast<double>(ner) / ratio)));
    const auto title = static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(std::min<std::int64_t>(doc, 5)) + 1));
    topicrank::TopicCandidate c;
    c.ner_frequency = ner;
    c.document_frequency = doc;
    c.title_frequency = title;
    rows.push_back({topicrank::compute_features(c), label});
  }
  return rows;
}

}  // namespace topicmine::testing

namespace topicmine::testing {

namespace {

template <std::size_t N>
const char* pick(Rng& rng, const char* const (&pool)[N]) {
  return pool[rng.index(N)];
}

const char* const kTopics[] = {"Project Falcon", "Data Lake", "Churn Rate", "Blue Ledger", "Service Mesh",
                               "Quarterly Forecast", "Feature Store", "Unit Economics", "Edge Cache", "Model Zoo",
                               "Release Train", "Cost Center", "Atlas Pipeline", "Signal Hub", "Risk Register"};
const char* const kKinds[] = {"internal platform", "metric", "shared service", "planning process", "storage system",
                              "reporting tool", "compliance program", "data product"};
const char* const kPurposes[] = {"tracks customer retention", "stores raw telemetry", "routes traffic between services",
                                 "serves features to models", "estimates revenue", "records audit findings",
                                 "collects release notes", "caches content near users"};
const char* const kFirst[] = {"Maria", "Tom", "Aisha", "Kenji", "Lena", "Omar", "Priya", "Jonas"};
const char* const kLast[] = {"Garcia", "Chen", "Okafor", "Sato", "Novak", "Haddad", "Iyer", "Berg"};
const char* const kJobs[] = {"scientist", "engineer", "manager", "designer", "analyst", "researcher"};
const char* const kTeams[] = {"search", "payments", "growth", "infrastructure", "security", "ads"};
const char* const kNouns[] = {"method", "approach", "tool", "dashboard", "process", "service"};
const char* const kVerbs[] = {"identify", "measure", "summarize", "monitor", "rank", "audit"};
const char* const kDays[] = {"Monday", "Tuesday", "Thursday", "Friday"};
const char* const kComplaints[] = {"terrible mess", "awful waste of time", "useless pile of scripts",
                                   "horrible nightmare to maintain", "slow and buggy disaster"};

}  // namespace

std::vector<defmine::LabeledText> definition_sentences(std::size_t count, std::uint64_t seed) {
  using defmine::DefinitionCategory;
  Rng rng(seed);
  std::vector<defmine::LabeledText> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string topic = pick(rng, kTopics);
    std::string s;
    DefinitionCategory c{};
    switch (i % 6) {
      case 0:
        c = DefinitionCategory::Sufficient;
        switch (rng.index(3)) {
          case 0: s = topic + " is defined as the " + pick(rng, kKinds) + " that " + pick(rng, kPurposes) + "."; break;
          case 1: s = topic + " refers to the " + pick(rng, kKinds) + " that " + pick(rng, kPurposes) + "."; break;
          default: s = topic + " is a " + pick(rng, kKinds) + " that " + pick(rng, kPurposes) + "."; break;
        }
        break;
      case 1:
        c = DefinitionCategory::Informational;
        s = topic + " was launched by the " + pick(rng, kTeams) + " team and " + pick(rng, kPurposes) + ".";
        break;
      case 2:
        c = DefinitionCategory::Referential;
        s = std::string(rng.index(2) ? "This " : "That ") + pick(rng, kNouns) + " is used to " + pick(rng, kVerbs) +
            " " + text::lower(topic) + " trends.";
        break;
      case 3:
        c = DefinitionCategory::Personal;
        s = std::string(pick(rng, kFirst)) + " " + pick(rng, kLast) + " is a " + pick(rng, kJobs) + " in the " +
            pick(rng, kTeams) + " team.";
        break;
      case 4:
        c = DefinitionCategory::NonDefinition;
        s = std::string("We will review ") + topic + " with the " + pick(rng, kTeams) + " team on " + pick(rng, kDays) +
            ".";
        break;
      default:
        c = DefinitionCategory::NonDefinition;
        s = topic + " is a " + pick(rng, kComplaints) + " and everyone knows it.";
        break;
    }
    out.emplace_back(std::move(s), c);
  }
  return out;
}

std::vector<std::pair<std::string, int>> sufficient_labels(const std::vector<defmine::LabeledText>& rows) {
  std::vector<std::pair<std::string, int>> out;
  for (const auto& [s, c] : rows) out.emplace_back(s, c == defmine::DefinitionCategory::Sufficient ? 1 : 0);
  return out;
}

}  // namespace topicmine::testing
