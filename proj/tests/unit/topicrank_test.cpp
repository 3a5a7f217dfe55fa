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

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "../support/fixtures.hpp"
#include "../support/temp_dir.hpp"
#include "topicmine/common.hpp"
#include "topicmine/topicrank.hpp"

using namespace topicmine;
using namespace topicmine::topicrank;
using nertag::Mention;

namespace {

Mention mention(const std::string& doc, const std::string& surface, bool title = false, std::size_t type = 1) {
  Mention m;
  m.doc_id = doc;
  m.surface = surface;
  m.from_title = title;
  m.entity_type = type;
  return m;
}

// Pairwise definition of AUC, independent of the rank-sum implementation.
double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

double model_auc(const GbdtModel& m, const std::vector<LabeledFeatures>& rows) {
  std::vector<double> s;
  std::vector<int> y;
  for (const auto& r : rows) {
    s.push_back(score_topic(m, r.features));
    y.push_back(r.label);
  }
  return auc(s, y);
}

void check_invariants(const CandidateStore& store) {
  for (const auto& [key, c] : store.candidates()) {
    CHECK(c.ner_frequency >= c.document_frequency);
    CHECK(c.document_frequency >= 1);
    CHECK(c.title_frequency <= c.ner_frequency);
    CHECK(static_cast<std::int64_t>(c.doc_ids.size()) == c.document_frequency);
  }
}

}  // namespace

TEST_CASE("normalize_key") {
  CHECK(normalize_key("  Viva Topics. ") == "viva topics");
  CHECK(normalize_key("NLP") == "nlp");
  CHECK_FALSE(normalize_key("...").has_value());
  CHECK(normalize_key("(Turing   Test)") == "turing test");
  CHECK(normalize_key("state-of-the-art") == "state-of-the-art");
}

TEST_CASE("accumulate") {
  CandidateStore store;
  SUBCASE("counts mentions, documents and titles") {
    std::vector<Mention> ms = {mention("d1", "Contoso", true), mention("d1", "contoso"), mention("d1", "Contoso.")};
    CHECK(store.accumulate("d1", ms));
    const auto* c = store.find("contoso");
    REQUIRE(c);
    CHECK(c->ner_frequency == 3);
    CHECK(c->document_frequency == 1);
    CHECK(c->title_frequency == 1);
    CHECK(c->display_name == "Contoso");
    SUBCASE("second delivery of the same document is a no-op") {
      CHECK_FALSE(store.accumulate("d1", ms));
      CHECK(store.find("contoso")->ner_frequency == 3);
    }
  }
  SUBCASE("order of documents does not matter") {
    std::vector<Mention> a = {mention("d1", "Contoso"), mention("d1", "Fabrikam", false, 2)};
    std::vector<Mention> b = {mention("d2", "Contoso", true)};
    CandidateStore s1, s2;
    s1.accumulate("d1", a);
    s1.accumulate("d2", b);
    s2.accumulate("d2", b);
    s2.accumulate("d1", a);
    CHECK(s1 == s2);
  }
  SUBCASE("mention from another document is a contract error") {
    std::vector<Mention> ms = {mention("d2", "x")};
    CHECK_THROWS_AS(store.accumulate("d1", ms), ContractError);
  }
  SUBCASE("unnormalizable mentions are dropped but the document is recorded") {
    std::vector<Mention> ms = {mention("d1", "--")};
    CHECK(store.accumulate("d1", ms));
    CHECK(store.size() == 0);
    CHECK(store.contains_document("d1"));
  }
  SUBCASE("majority type and display name") {
    std::vector<Mention> ms = {mention("d1", "Amazon", false, 1), mention("d1", "Amazon", false, 2),
                               mention("d1", "AMAZON", false, 2)};
    store.accumulate("d1", ms);
    CHECK(store.find("amazon")->entity_type == 2);
    CHECK(store.find("amazon")->display_name == "Amazon");
  }
}

TEST_CASE("store properties under random event sequences") {
  Rng rng(31);
  const std::vector<std::string> names = {"Contoso", "Fabrikam", "Project Falcon", "NLP", "Seattle", "Adatum"};
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::pair<std::string, std::vector<Mention>>> docs;
    for (int d = 0; d < 12; ++d) {
      const std::string id = "doc" + std::to_string(d);
      std::vector<Mention> ms;
      const std::size_t k = rng.index(6);
      for (std::size_t i = 0; i < k; ++i) {
        ms.push_back(mention(id, names[rng.index(names.size())], rng.uniform() < 0.3, rng.index(8)));
      }
      docs.emplace_back(id, std::move(ms));
    }
    CandidateStore forward, shuffled;
    for (const auto& [id, ms] : docs) {
      forward.accumulate(id, ms);
      check_invariants(forward);
    }
    auto order = docs;
    rng.shuffle(order);
    for (const auto& [id, ms] : order) shuffled.accumulate(id, ms);
    CHECK(forward == shuffled);

    // Sharded build merged afterwards.
    CandidateStore left, right;
    for (std::size_t i = 0; i < docs.size(); ++i) (i % 2 ? left : right).accumulate(docs[i].first, docs[i].second);
    left.merge(right);
    CHECK(left == forward);
    CHECK_THROWS_AS(left.merge(right), ContractError);

    // Removing documents equals never adding them.
    CandidateStore reduced;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (i % 3 != 0) reduced.accumulate(docs[i].first, docs[i].second);
    }
    for (std::size_t i = 0; i < docs.size(); i += 3) {
      CHECK(forward.remove_document(docs[i].first));
      check_invariants(forward);
    }
    CHECK(forward == reduced);
    CHECK_FALSE(forward.remove_document("unknown"));
  }
}

TEST_CASE("store snapshot round trip") {
  testing::TempDir dir;
  CandidateStore store;
  std::vector<Mention> ms = {mention("d1", "Contoso", true), mention("d1", "Project Falcon", false, 4)};
  std::vector<Mention> ms2 = {mention("d2", "Contoso")};
  store.accumulate("d1", ms);
  store.accumulate("d2", ms2);
  store.save(dir.path());
  CHECK(CandidateStore::load(dir.path()) == store);

  // A tampered snapshot is detected.
  auto snap = testing::read_file(dir.path() / "candidates.jsonl");
  snap.replace(snap.find("\"ner_frequency\":2"), 17, "\"ner_frequency\":9");
  dir.write("candidates.jsonl", snap);
  CHECK_THROWS(CandidateStore::load(dir.path()));
}

TEST_CASE("shortlist") {
  CandidateStore store;
  auto add = [&](const std::string& doc, const std::string& surface, int times) {
    std::vector<Mention> ms;
    for (int i = 0; i < times; ++i) ms.push_back(mention(doc, surface));
    store.accumulate(doc, ms);
  };
  add("d1", "alpha", 5);
  add("d2", "beta", 2);
  add("d3", "gamma", 9);
  CHECK(shortlist(store, 2) == std::vector<std::string>{"gamma", "alpha"});
  CHECK(shortlist(store, 10).size() == 3);
  add("d4", "delta", 4);
  add("d5", "carol", 4);
  CHECK(shortlist(store, 4) == std::vector<std::string>{"gamma", "alpha", "carol", "delta"});
  CHECK_THROWS_AS(shortlist(store, 0), ContractError);
}

TEST_CASE("compute_features") {
  auto f = compute_features(testing::make_candidate("x", 10, 5, 2));
  CHECK(f[Feature::ner_per_doc] == 2.0);
  CHECK(f[Feature::title_per_doc] == 0.4);
  CHECK(f[Feature::title_per_ner] == 0.2);
  CHECK(f[Feature::log1p_ner] == doctest::Approx(std::log(11.0)));
  f = compute_features(testing::make_candidate("x", 1, 1, 0));
  CHECK(f[Feature::ner_per_doc] == 1.0);
  CHECK(f[Feature::title_per_doc] == 0.0);
  CHECK(f[Feature::title_per_ner] == 0.0);
  f = compute_features(testing::make_candidate("company", 1000, 1000, 0));
  CHECK(f[Feature::ner_per_doc] == 1.0);
  CHECK_THROWS_AS(compute_features(testing::make_candidate("bad", 1, 2, 0)), ContractError);
}

TEST_CASE("auc") {
  CHECK(auc(std::vector<double>{0.9, 0.8, 0.3}, std::vector<int>{1, 0, 1}) == 0.5);
  CHECK(auc(std::vector<double>{0.9, 0.8, 0.1, 0.2}, std::vector<int>{1, 1, 0, 0}) == 1.0);
  CHECK(auc(std::vector<double>{0.4, 0.4, 0.4}, std::vector<int>{1, 0, 1}) == 0.5);
  CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), ContractError);

  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(40);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::round(rng.uniform() * 10.0) / 10.0;  // plenty of ties
      y[i] = static_cast<int>(rng.index(2));
    }
    y[0] = 1;
    y[1] = 0;
    const double a = auc(s, y);
    CHECK(a == doctest::Approx(pairwise_auc(s, y)).epsilon(1e-12));
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3.0 * s[i]) - 7.0;
    CHECK(auc(t, y) == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("train_gbdt") {
  const auto train = testing::ratio_labeled_rows(400, 1);
  GbdtConfig cfg;
  const auto model = train_gbdt(train, cfg);
  CHECK(model.trees().size() == 100);
  for (const auto& t : model.trees()) CHECK(t.depth() <= cfg.max_depth);
  CHECK(model_auc(model, train) >= 0.95);

  SUBCASE("deterministic") { CHECK(train_gbdt(train, cfg) == model); }
  SUBCASE("subsampling is seeded") {
    GbdtConfig sub = cfg;
    sub.subsample = 0.5;
    CHECK(train_gbdt(train, sub) == train_gbdt(train, sub));
    sub.seed = 99;
    CHECK(model_auc(train_gbdt(train, sub), train) >= 0.95);
  }
  SUBCASE("zero trees predicts the prior") {
    GbdtConfig none = cfg;
    none.num_trees = 0;
    const auto prior = train_gbdt(train, none);
    double positives = 0;
    for (const auto& r : train) positives += r.label;
    for (const auto& r : train) {
      CHECK(score_topic(prior, r.features) == doctest::Approx(positives / static_cast<double>(train.size())));
    }
  }
  SUBCASE("balanced zero-tree model scores 0.5") {
    GbdtModel flat(0.0, 0.1);
    CHECK(score_topic(flat, compute_features(testing::make_candidate("x", 3, 2, 1))) == 0.5);
  }
  SUBCASE("company signature scores below a high-ratio topic") {
    const double company = score_topic(model, compute_features(testing::make_candidate("company", 1000, 1000, 0)));
    const double good = score_topic(model, compute_features(testing::make_candidate("falcon", 1000, 250, 20)));
    CHECK(company < good);
    CHECK(company >= 0.0);
    CHECK(good <= 1.0);
  }
  SUBCASE("beats the ner-frequency baseline on held-out data") {
    const auto valid = testing::ratio_labeled_rows(400, 2);
    std::vector<double> freq;
    std::vector<int> y;
    for (const auto& r : valid) {
      freq.push_back(r.features[Feature::ner_freq]);
      y.push_back(r.label);
    }
    CHECK(model_auc(model, valid) > auc(freq, y));
  }
  SUBCASE("save/load") {
    testing::TempDir dir;
    model.save(dir.path() / "ranker.json");
    const auto loaded = GbdtModel::load(dir.path() / "ranker.json");
    for (const auto& r : train) CHECK(score_topic(loaded, r.features) == score_topic(model, r.features));
  }
  SUBCASE("an all-positive tree never lowers a score") {
    GbdtModel bumped = model;
    RegressionTree t;
    t.nodes = {{static_cast<int>(Feature::ner_per_doc), 1.5, 1, 2, 0.0}, {-1, 0, -1, -1, 0.3}, {-1, 0, -1, -1, 0.7}};
    bumped.add_tree(t);
    for (const auto& r : train) CHECK(score_topic(bumped, r.features) >= score_topic(model, r.features));
  }
  SUBCASE("single class is rejected") {
    std::vector<LabeledFeatures> one(train.begin(), train.end());
    for (auto& r : one) r.label = 1;
    CHECK_THROWS_AS(train_gbdt(one, cfg), ContractError);
  }
}

TEST_CASE("rerank_and_filter") {
  const auto model = train_gbdt(testing::ratio_labeled_rows(400, 5), {});
  CandidateStore store;
  // Real topic: repeated within few documents. Noise: once per document in many.
  for (int d = 0; d < 50; ++d) {
    const std::string id = "d" + std::to_string(d);
    std::vector<Mention> ms = {mention(id, "Company")};
    if (d < 10) {
      for (int k = 0; k < 4; ++k) ms.push_back(mention(id, "Project Falcon", k == 0));
    }
    if (d < 6) {
      for (int k = 0; k < 3; ++k) ms.push_back(mention(id, "Contoso"));
    }
    store.accumulate(id, ms);
  }
  const auto keys = shortlist(store, 10);
  CHECK(keys.front() == "company");  // frequency alone puts the noise first

  SUBCASE("no cutoff is a permutation ordered by score") {
    const auto ranked = rerank_and_filter(keys, store, model, kUnlimited, 0.0);
    REQUIRE(ranked.entries.size() == keys.size());
    for (std::size_t i = 1; i < ranked.entries.size(); ++i) {
      CHECK(ranked.entries[i - 1].score >= ranked.entries[i].score);
    }
    CHECK(ranked.entries.back().key == "company");
  }
  SUBCASE("planted noise topic is filtered") {
    const auto ranked = rerank_and_filter(keys, store, model, kUnlimited, 0.5);
    CHECK(std::none_of(ranked.entries.begin(), ranked.entries.end(),
                       [](const RankedTopic& e) { return e.key == "company"; }));
    CHECK(ranked.entries.size() == 2);
  }
  SUBCASE("top_k truncates") { CHECK(rerank_and_filter(keys, store, model, 1, 0.0).entries.size() == 1); }
  SUBCASE("empty shortlist") { CHECK(rerank_and_filter({}, store, model, 5, 0.0).entries.empty()); }
}

TEST_CASE("label file") {
  testing::TempDir dir;
  auto p = dir.write("labels.csv", "key,label\nProject Falcon,1\ncompany,0\n\"a, b\",1\n");
  const auto labels = load_label_file(p);
  CHECK(labels.at("project falcon") == 1);
  CHECK(labels.at("company") == 0);
  CHECK(labels.size() == 3);
  CHECK_THROWS(load_label_file(dir.write("bad.csv", "x,1\ny,2\n")));
}
