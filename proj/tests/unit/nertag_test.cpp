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

#include <cmath>
#include <functional>
#include <limits>

#include "../support/fixtures.hpp"
#include "../support/temp_dir.hpp"
#include "topicmine/common.hpp"
#include "topicmine/nertag.hpp"

using namespace topicmine;
using namespace topicmine::nertag;

namespace {

// Exhaustive maximum over all BIO-valid sequences. Independent of the decoder.
std::vector<Label> brute_force_best(const ScoreMatrix& m, const LabelSet& labels) {
  const std::size_t n = m.rows();
  const std::size_t width = labels.size();
  std::vector<Label> cur(n, 0);
  std::vector<Label> best;
  double best_score = -std::numeric_limits<double>::infinity();
  while (true) {
    if (labels.valid(cur)) {
      const double s = path_score(m, cur);
      if (s > best_score) {
        best_score = s;
        best = cur;
      }
    }
    std::size_t pos = 0;
    while (pos < n && ++cur[pos] == width) cur[pos++] = 0;
    if (pos == n) break;
  }
  return best;
}

ScoreMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 3.0) {
  ScoreMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = scale * rng.gaussian();
  }
  return m;
}

ScoreMatrix row_matrix(const LabelSet& labels, std::initializer_list<std::initializer_list<std::pair<const char*, double>>> rows,
                       double fill = -10.0) {
  ScoreMatrix m(rows.size(), labels.size(), fill);
  std::size_t r = 0;
  for (const auto& row : rows) {
    for (const auto& [name, v] : row) m(r, labels.ordinal(name)) = v;
    ++r;
  }
  return m;
}

std::vector<Label> ords(const LabelSet& labels, std::initializer_list<const char*> names) {
  std::vector<Label> out;
  for (const char* n : names) out.push_back(labels.ordinal(n));
  return out;
}

double token_accuracy(const TaggerModel& model, const std::vector<LabeledSentence>& data) {
  std::size_t hit = 0, total = 0;
  for (const auto& s : data) {
    const auto path = viterbi_decode(model.score_tokens(s.tokens, s.from_title), model.labels());
    for (std::size_t t = 0; t < path.size(); ++t) {
      hit += path[t] == s.labels[t];
      ++total;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

double entity_recall(const TaggerModel& model, const std::vector<LabeledSentence>& data) {
  std::size_t hit = 0, total = 0;
  for (const auto& s : data) {
    const auto scores = model.score_tokens(s.tokens, s.from_title);
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      if (s.labels[t] == LabelSet::outside()) continue;
      ++total;
      Label arg = 0;
      for (Label l = 1; l < scores.cols(); ++l) {
        if (scores(t, l) > scores(t, arg)) arg = l;
      }
      hit += arg == s.labels[t];
    }
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("label set layout") {
  const auto labels = LabelSet::defaults();
  CHECK(labels.type_count() == 8);
  CHECK(labels.size() == 17);
  CHECK(labels.types().back() == "event");
  CHECK(labels.name(0) == "O");
  CHECK(labels.ordinal("B-person") == 1);
  CHECK(labels.ordinal("I-person") == 2);
  CHECK(labels.ordinal("I-event") == 16);
  CHECK_THROWS_AS(labels.ordinal("B-animal"), ContractError);
  CHECK(labels.valid(ords(labels, {"B-person", "I-person", "O", "B-event"})));
  CHECK_FALSE(labels.valid(ords(labels, {"I-person"})));
  CHECK_FALSE(labels.valid(ords(labels, {"B-person", "I-event"})));
  CHECK_FALSE(labels.valid(ords(labels, {"O", "I-person"})));
}

TEST_CASE("viterbi_decode examples") {
  const LabelSet labels({"per", "wrk"});
  SUBCASE("I at the start is invalid even when it scores highest") {
    auto m = row_matrix(labels, {{{"O", 0.1}, {"B-per", 0.9}, {"I-per", 2.0}}});
    CHECK(viterbi_decode(m, labels) == ords(labels, {"B-per"}));
  }
  SUBCASE("greedy-invalid matrix") {
    const auto full = LabelSet::defaults();
    const auto m = testing::turing_test_scores(full);
    CHECK(greedy_decode(m, full) == ords(full, {"B-person", "O", "O"}));
    CHECK(viterbi_decode(m, full) == ords(full, {"B-creative_work", "I-creative_work", "I-creative_work"}));
    // The raw argmax is the invalid sequence.
    std::vector<Label> argmax;
    for (std::size_t r = 0; r < 3; ++r) {
      Label a = 0;
      for (Label l = 1; l < full.size(); ++l) a = m(r, l) > m(r, a) ? l : a;
      argmax.push_back(a);
    }
    CHECK(argmax == ords(full, {"B-person", "I-creative_work", "I-creative_work"}));
    CHECK_FALSE(full.valid(argmax));
  }
  SUBCASE("ties resolve to the smaller ordinal") {
    ScoreMatrix m(2, labels.size(), 0.0);
    CHECK(viterbi_decode(m, labels) == ords(labels, {"O", "O"}));
  }
  SUBCASE("empty input is a contract error") {
    CHECK_THROWS_AS(viterbi_decode(ScoreMatrix(0, labels.size()), labels), ContractError);
    CHECK_THROWS_AS(viterbi_decode(ScoreMatrix(2, 3), labels), ContractError);
  }
}

TEST_CASE("viterbi_decode matches brute force on small random matrices") {
  const LabelSet labels({"a", "b"});
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(6);
    const auto m = random_matrix(rng, n, labels.size());
    REQUIRE(viterbi_decode(m, labels) == brute_force_best(m, labels));
  }
}

TEST_CASE("viterbi properties: validity, dominance, shift invariance") {
  const auto labels = LabelSet::defaults();
  Rng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.index(30);
    auto m = random_matrix(rng, n, labels.size(), 1.0 + rng.uniform() * 5.0);
    const auto v = viterbi_decode(m, labels);
    const auto g = greedy_decode(m, labels);
    REQUIRE(labels.valid(v));
    REQUIRE(labels.valid(g));
    CHECK(path_score(m, v) >= path_score(m, g));

    const double c = 10.0 * rng.gaussian();
    ScoreMatrix shifted = m;
    for (std::size_t r = 0; r < n; ++r) {
      for (auto& x : shifted.row(r)) x += c;
    }
    CHECK(viterbi_decode(shifted, labels) == v);
  }
}

TEST_CASE("greedy_decode repair") {
  const LabelSet labels({"per", "wrk"});
  SUBCASE("invalid continuation becomes O") {
    auto m = row_matrix(labels, {{{"B-per", 1.0}}, {{"I-wrk", 1.0}}, {{"I-wrk", 1.0}}});
    CHECK(greedy_decode(m, labels) == ords(labels, {"B-per", "O", "O"}));
  }
  SUBCASE("valid argmax unchanged") {
    auto m = row_matrix(labels, {{{"B-per", 1.0}}, {{"I-per", 1.0}}, {{"O", 1.0}}});
    CHECK(greedy_decode(m, labels) == ords(labels, {"B-per", "I-per", "O"}));
  }
  SUBCASE("leading I run") {
    auto m = row_matrix(labels, {{{"I-per", 1.0}}, {{"I-per", 1.0}}});
    CHECK(greedy_decode(m, labels) == ords(labels, {"O", "O"}));
  }
}

TEST_CASE("extract_mentions") {
  const auto labels = LabelSet::defaults();
  corpus::Sentence s{"d1", 3, {0, 20}, "Alan Turing proposed", false};
  const auto tokens = corpus::tokenize(s);
  SUBCASE("person span") {
    const auto m = extract_mentions(s, tokens, ords(labels, {"B-person", "I-person", "O"}), labels);
    REQUIRE(m.size() == 1);
    CHECK(m[0].surface == "Alan Turing");
    CHECK(m[0].entity_type == labels.type_index("person"));
    CHECK(m[0].doc_id == "d1");
    CHECK(m[0].sentence_index == 3);
    CHECK(m[0].token_begin == 0);
    CHECK(m[0].token_end == 2);
    CHECK(s.text.substr(m[0].char_span.begin, m[0].char_span.size()) == "Alan Turing");
  }
  SUBCASE("all O") { CHECK(extract_mentions(s, tokens, ords(labels, {"O", "O", "O"}), labels).empty()); }
  SUBCASE("adjacent B labels are separate mentions") {
    corpus::Sentence two{"d1", 0, {0, 13}, "Contoso Adatum", false};
    const auto m = extract_mentions(two, corpus::tokenize(two), ords(labels, {"B-organization", "B-organization"}),
                                    labels);
    REQUIRE(m.size() == 2);
    CHECK(m[0].surface == "Contoso");
    CHECK(m[1].surface == "Adatum");
  }
  SUBCASE("mention score sums chosen-label scores") {
    ScoreMatrix sc(3, labels.size(), -1.0);
    sc(0, 1) = -0.25;
    sc(1, 2) = -0.5;
    const auto m = extract_mentions(s, tokens, ords(labels, {"B-person", "I-person", "O"}), labels, &sc);
    CHECK(m[0].score == doctest::Approx(-0.75));
  }
  SUBCASE("invalid sequence is rejected") {
    CHECK_THROWS_AS(extract_mentions(s, tokens, ords(labels, {"I-person", "O", "O"}), labels), ContractError);
    CHECK_THROWS_AS(extract_mentions(s, tokens, ords(labels, {"O"}), labels), ContractError);
  }
}

TEST_CASE("featurize") {
  const std::vector<std::string> words = {"NLP", "Turing", "test"};
  auto has = [](const std::vector<std::string>& f, const std::string& s) {
    return std::find(f.begin(), f.end(), s) != f.end();
  };
  CHECK(word_shape("NLP") == "X");
  CHECK(word_shape("Turing") == "Xx");
  CHECK(word_shape("COVID-19") == "X-9");
  const auto f0 = feature_strings(words, 0, false);
  CHECK(has(f0, "shape=X"));
  CHECK(has(f0, "prev=<s>"));
  CHECK(has(f0, "next=turing"));
  const auto f1 = feature_strings(words, 1, true);
  CHECK(has(f1, "s3=ing"));
  CHECK(has(f1, "p1=t"));
  CHECK(has(f1, "title=1"));
  CHECK(has(feature_strings(words, 2, false), "next=</s>"));
  CHECK(featurize(words, 1, true, 1024) == featurize(words, 1, true, 1024));
  for (auto h : featurize(words, 1, true, 1024)) CHECK(h < 1024);
  CHECK_THROWS_AS(feature_strings(words, 3, false), ContractError);
}

TEST_CASE("focal_loss values") {
  const std::vector<double> half = {0.5, 0.25, 0.25};
  CHECK(focal_loss(half, 0, 0.0).loss == doctest::Approx(0.6931471805599453).epsilon(1e-12));
  CHECK(focal_loss(std::vector<double>{1.0, 0.0}, 0, 1.6).loss == 0.0);
  // (1 - 0.5)^1.6 * ln 2, evaluated at 30 digits.
  CHECK(std::abs(focal_loss(half, 0, 1.6).loss - 0.228653297019693885) < 1e-12);
  const auto zero = focal_loss(std::vector<double>{0.0, 1.0}, 0, 1.6);
  CHECK(zero.loss == doctest::Approx(-std::log(1e-12)));
  CHECK(std::isfinite(zero.gradient[0]));
  CHECK_THROWS_AS(focal_loss(half, 0, -0.1), ContractError);
  CHECK_THROWS_AS(focal_loss(half, 3, 1.0), ContractError);
}

TEST_CASE("focal_loss gradient matches central differences") {
  Rng rng(5);
  for (double gamma : {0.0, 0.5, 1.6, 3.0}) {
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t k = 2 + rng.index(8);
      std::vector<double> z(k);
      for (auto& v : z) v = 2.0 * rng.gaussian();
      const Label gold = static_cast<Label>(rng.index(k));
      const auto analytic = focal_loss(softmax(z), gold, gamma);
      auto loss_at = [&](std::vector<double> zz) { return focal_loss(softmax(zz), gold, gamma).loss; };
      for (std::size_t j = 0; j < k; ++j) {
        const double h = 1e-5;
        auto zp = z, zm = z;
        zp[j] += h;
        zm[j] -= h;
        const double numeric = (loss_at(zp) - loss_at(zm)) / (2 * h);
        const double denom = std::max(std::abs(numeric), 1e-6);
        CHECK(std::abs(analytic.gradient[j] - numeric) / denom < 1e-5);
      }
      if (gamma == 0.0) {
        const auto p = softmax(z);
        CHECK(analytic.loss == -std::log(p[gold]));
      }
    }
  }
}

TEST_CASE("score_tokens normalization") {
  const auto labels = LabelSet::defaults();
  TaggerModel zero(labels, 256, 1.6);
  const std::vector<std::string> words = {"Grace", "Hopper", "wrote"};
  const auto m = zero.score_tokens(words);
  REQUIRE(m.rows() == 3);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double total = 0.0;
    for (double v : m.row(r)) {
      CHECK(v == doctest::Approx(std::log(1.0 / 17.0)).epsilon(1e-12));
      total += std::exp(v);
    }
    CHECK(std::abs(total - 1.0) < 1e-6);
  }
}

TEST_CASE("train_tagger on separable data") {
  const auto labels = LabelSet::defaults();
  const auto data = testing::separable_tagging_data(200, 11, labels);
  TaggerConfig cfg;
  cfg.hash_dim = 1u << 16;
  cfg.epochs = 5;
  const auto model = train_tagger(data, labels, cfg);
  CHECK(token_accuracy(model, data) >= 0.95);
  CHECK(model.training_loss() >= 0.0);

  const std::vector<std::string> words = {"Grace", "Hopper"};
  const auto m = model.score_tokens(words);
  Label arg = 0;
  for (Label l = 1; l < labels.size(); ++l) arg = m(0, l) > m(0, arg) ? l : arg;
  CHECK(labels.name(arg) == "B-person");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double total = 0.0;
    for (double v : m.row(r)) total += std::exp(v);
    CHECK(std::abs(total - 1.0) < 1e-6);
  }

  SUBCASE("same seed gives identical weights") {
    const auto again = train_tagger(data, labels, cfg);
    CHECK(std::equal(model.weights().begin(), model.weights().end(), again.weights().begin()));
  }
  SUBCASE("save/load round trip") {
    testing::TempDir dir;
    model.save(dir.path() / "tagger.bin");
    const auto loaded = TaggerModel::load(dir.path() / "tagger.bin");
    CHECK(loaded.labels() == labels);
    CHECK(loaded.gamma() == model.gamma());
    CHECK(std::equal(model.weights().begin(), model.weights().end(), loaded.weights().begin()));
  }
}

TEST_CASE("train_tagger rejects bad input") {
  const auto labels = LabelSet::defaults();
  CHECK_THROWS_AS(train_tagger({}, labels, {}), ContractError);
  std::vector<LabeledSentence> bad = {{{"x"}, {labels.ordinal("I-person")}, false}};
  CHECK_THROWS_AS(train_tagger(bad, labels, {}), ContractError);
}

TEST_CASE("focal loss helps recall on imbalanced data") {
  const auto labels = LabelSet::defaults();
  const auto train = testing::imbalanced_tagging_data(100, 0.01, 3, labels);
  const auto test = testing::imbalanced_tagging_data(300, 0.01, 4, labels);
  TaggerConfig cfg;
  cfg.hash_dim = 1u << 14;
  cfg.epochs = 2;
  cfg.learning_rate = 0.05;
  cfg.gamma = 0.0;
  const auto ce = train_tagger(train, labels, cfg);
  cfg.gamma = 1.6;
  const auto focal = train_tagger(train, labels, cfg);
  const double r_ce = entity_recall(ce, test);
  const double r_focal = entity_recall(focal, test);
  MESSAGE("recall gamma=0: " << r_ce << ", gamma=1.6: " << r_focal);
  CHECK(r_focal >= r_ce);
}

TEST_CASE("augment") {
  const auto labels = LabelSet::defaults();
  const Label bp = labels.ordinal("B-person"), ip = labels.ordinal("I-person"), o = 0;
  const std::vector<LabeledSentence> data = {{{"Alan", "Turing", "proposed"}, {bp, ip, o}, false}};

  SUBCASE("single-element bank replacement") {
    const auto out = augment(data, AugmentMode::entity_replace, labels, {{"person", {"Grace Hopper"}}}, 1);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == data[0]);
    CHECK(out[1].tokens == std::vector<std::string>{"Grace", "Hopper", "proposed"});
    CHECK(out[1].labels == std::vector<Label>{bp, ip, o});
  }
  SUBCASE("longer replacement re-spans the labels") {
    const auto out = augment(data, AugmentMode::entity_replace, labels, {{"person", {"Rear Admiral Hopper"}}}, 1);
    CHECK(out[1].tokens.size() == 4);
    CHECK(out[1].labels == std::vector<Label>{bp, ip, ip, o});
  }
  SUBCASE("lowercase keeps labels") {
    const std::vector<LabeledSentence> nlp = {{{"NLP", "is", "fun"}, {labels.ordinal("B-field_of_study"), o, o}, false}};
    const auto out = augment(nlp, AugmentMode::lowercase, labels, {}, 1);
    REQUIRE(out.size() == 2);
    CHECK(out[1].tokens == std::vector<std::string>{"nlp", "is", "fun"});
    CHECK(out[1].labels == nlp[0].labels);
  }
  SUBCASE("missing bank type names the type") {
    try {
      augment(data, AugmentMode::entity_replace, labels, {{"location", {"Paris"}}}, 1);
      FAIL("expected an error");
    } catch (const ContractError& e) {
      CHECK(std::string(e.what()).find("person") != std::string::npos);
    }
  }
  SUBCASE("size doubles and gold stays valid on random data") {
    const auto many = testing::separable_tagging_data(60, 8, labels);
    EntityBank bank = {{"person", {"A B C", "D"}}, {"organization", {"E F"}}, {"location", {"G"}}};
    for (auto mode : {AugmentMode::lowercase, AugmentMode::entity_replace}) {
      const auto out = augment(many, mode, labels, bank, 3);
      CHECK(out.size() == 2 * many.size());
      for (const auto& s : out) {
        CHECK(labels.valid(s.labels));
        CHECK(s.tokens.size() == s.labels.size());
      }
    }
  }
}

TEST_CASE("file formats") {
  testing::TempDir dir;
  const auto labels = LabelSet({"per", "wrk"});
  SUBCASE("score file columns are reordered into label order") {
    auto p = dir.write("s.jsonl",
                       R"({"doc_id":"d","sentence_index":2,"labels":["I-wrk","O","B-per","I-per","B-wrk"],)"
                       R"("scores":[[5,1,2,3,4]]})" "\n");
    const auto recs = load_score_file(p, labels);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].doc_id == "d");
    CHECK(recs[0].sentence_index == 2);
    CHECK(recs[0].scores(0, labels.ordinal("O")) == 1);
    CHECK(recs[0].scores(0, labels.ordinal("I-wrk")) == 5);
  }
  SUBCASE("score file with missing label fails") {
    auto p = dir.write("s.jsonl", R"({"doc_id":"d","sentence_index":0,"labels":["O"],"scores":[[1]]})" "\n");
    CHECK_THROWS(load_score_file(p, labels));
  }
  SUBCASE("labeled data round trip") {
    std::vector<LabeledSentence> data = {{{"Ada", "wrote"}, {1, 0}, true}, {{"x"}, {0}, false}};
    save_labeled_sentences(dir.path() / "l.jsonl", data, labels);
    CHECK(load_labeled_sentences(dir.path() / "l.jsonl", labels) == data);
  }
  SUBCASE("entity bank") {
    auto p = dir.write("bank.json", R"({"per":["Ada Lovelace","Grace"]})");
    const auto bank = load_entity_bank(p);
    CHECK(bank.at("per").size() == 2);
  }
}
