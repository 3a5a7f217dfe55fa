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

#include "topicmine/defmine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "topicmine/common.hpp"
#include "topicmine/topicrank.hpp"

namespace topicmine::defmine {

using nlohmann::json;

namespace {

const std::set<std::string> kReferentialSubjects = {"it", "this", "that", "these"};

const std::set<std::string> kPronouns = {"it",  "this", "that", "these", "those", "he",    "she", "they",
                                         "we",  "i",    "you",  "there", "which", "who",   "what", "here",
                                         "him", "her",  "them", "us",    "one",   "something"};

const std::set<std::string> kDeterminers = {"a", "an", "the"};

// Job-title heads that mark "<Name> is a ... <occupation>" as a personal description.
const std::set<std::string> kOccupationCues = {
    "scientist", "engineer",  "manager",   "director",  "developer",  "researcher", "designer",   "analyst",
    "consultant", "architect", "lead",      "intern",    "professor",  "student",    "officer",    "president",
    "ceo",       "cto",       "cfo",       "founder",   "writer",     "editor",     "specialist", "administrator",
    "coordinator", "lawyer",  "doctor",    "nurse",     "teacher",    "accountant", "programmer", "executive",
    "vp",        "chair",     "member",    "employee",  "contractor", "fellow",     "recruiter",  "strategist"};

// Bundled lexicon; the full Hu-Liu lists can be loaded from files instead.
const char* const kNegativeWords[] = {
    "abysmal",    "annoying",  "appalling",  "atrocious", "awful",      "bad",        "biggest",    "boring",
    "broken",     "buggy",     "careless",   "catastrophic", "clumsy",  "confusing",  "crap",       "crappy",
    "crash",      "crashes",   "defective",  "deficient", "difficult",  "disappointing", "disaster", "disgusting",
    "dreadful",   "dumb",      "expensive",  "fail",      "failed",     "failure",    "faulty",     "flawed",
    "frustrating", "garbage",  "hate",       "hated",     "horrible",   "horrid",     "ugly",       "inferior",
    "junk",       "lame",      "laughable",  "lousy",     "mediocre",   "mess",       "messy",      "miserable",
    "nasty",      "nightmare", "overpriced", "pathetic",  "poor",       "poorly",     "problematic", "ridiculous",
    "rubbish",    "sad",       "scary",      "shoddy",    "silly",      "slow",       "stupid",     "sucks",
    "terrible",   "tedious",   "trash",      "unacceptable", "unreliable", "unusable", "useless",   "wasteful",
    "weak",       "worse",     "worst",      "worthless", "wrong",      "insane",     "crazy",      "hideous"};

const char* const kPositiveWords[] = {"amazing", "awesome", "beautiful", "best",     "brilliant", "excellent",
                                      "fantastic", "good",  "great",     "helpful",  "impressive", "love",
                                      "nice",    "perfect", "reliable",  "superb",   "useful",    "wonderful"};

bool is_word_token(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return !text::is_punct(c); });
}

struct ConnectiveMatch {
  std::size_t pattern = 0;
  std::size_t first_token = 0;
  std::size_t end_token = 0;  // one past the last connective token
};

std::optional<ConnectiveMatch> find_connective(const std::vector<corpus::Token>& tokens,
                                               const std::vector<std::string>& lowered,
                                               std::span<const DefinitionPattern> patterns) {
  for (std::size_t p = 0; p < patterns.size(); ++p) {
    const auto words = text::split_ws(patterns[p].connective);
    if (words.empty() || words.size() > tokens.size()) continue;
    for (std::size_t i = 0; i + words.size() <= tokens.size(); ++i) {
      bool hit = true;
      for (std::size_t k = 0; k < words.size() && hit; ++k) hit = lowered[i + k] == words[k];
      if (hit) return ConnectiveMatch{p, i, i + words.size()};
    }
  }
  return std::nullopt;
}

std::vector<DefinitionPattern> by_priority(std::vector<DefinitionPattern> patterns) {
  std::stable_sort(patterns.begin(), patterns.end(),
                   [](const DefinitionPattern& a, const DefinitionPattern& b) { return a.priority < b.priority; });
  return patterns;
}

bool edge_strippable(std::string_view s, bool front) {
  if (s.empty()) return false;
  const char c = front ? s.front() : s.back();
  if (text::is_space(c) || text::is_punct(c)) return true;
  // Curly quotes.
  const std::string_view q = front ? s.substr(0, std::min<std::size_t>(3, s.size())) : s.substr(s.size() >= 3 ? s.size() - 3 : 0);
  return q == "\xE2\x80\x9C" || q == "\xE2\x80\x9D" || q == "\xE2\x80\x98" || q == "\xE2\x80\x99";
}

std::string_view strip_edges(std::string_view s) {
  while (edge_strippable(s, true)) s.remove_prefix(text::is_punct(s.front()) || text::is_space(s.front()) ? 1 : 3);
  while (edge_strippable(s, false)) s.remove_suffix(text::is_punct(s.back()) || text::is_space(s.back()) ? 1 : 3);
  return s;
}

std::string length_bucket(std::size_t words) {
  if (words <= 6) return "len=short";
  if (words <= 12) return "len=medium";
  if (words <= 20) return "len=long";
  return "len=xlong";
}

std::array<double, kCategoryCount> softmax5(const std::array<double, kCategoryCount>& z) {
  std::array<double, kCategoryCount> p{};
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    p[c] = std::exp(z[c] - mx);
    sum += p[c];
  }
  for (auto& v : p) v /= sum;
  return p;
}

}  // namespace

const char* category_name(DefinitionCategory c) {
  switch (c) {
    case DefinitionCategory::Sufficient: return "Sufficient";
    case DefinitionCategory::Informational: return "Informational";
    case DefinitionCategory::Referential: return "Referential";
    case DefinitionCategory::Personal: return "Personal";
    case DefinitionCategory::NonDefinition: return "NonDefinition";
  }
  return "?";
}

DefinitionCategory parse_category(std::string_view name) {
  const std::string n = text::lower(text::trim(name));
  if (n == "sufficient") return DefinitionCategory::Sufficient;
  if (n == "informational") return DefinitionCategory::Informational;
  if (n == "referential") return DefinitionCategory::Referential;
  if (n == "personal") return DefinitionCategory::Personal;
  if (n == "nondefinition" || n == "non_definition" || n == "non-definition") return DefinitionCategory::NonDefinition;
  throw ContractError("unknown definition category '" + std::string(name) + "'");
}

DefinitionPattern DefinitionPattern::parse(std::string_view template_text, int priority) {
  constexpr std::string_view kTopic = "{topic}";
  constexpr std::string_view kDescription = "{description}";
  const auto topic_at = template_text.find(kTopic);
  if (topic_at == std::string_view::npos || template_text.find(kTopic, topic_at + 1) != std::string_view::npos) {
    throw ContractError("pattern needs exactly one {topic} slot: " + std::string(template_text));
  }
  const auto desc_at = template_text.find(kDescription);
  if (desc_at == std::string_view::npos || desc_at < topic_at + kTopic.size()) {
    throw ContractError("pattern needs a {description} slot after {topic}: " + std::string(template_text));
  }
  const auto words = text::split_ws(text::lower(template_text.substr(topic_at + kTopic.size(),
                                                                     desc_at - topic_at - kTopic.size())));
  if (words.empty()) throw ContractError("pattern has an empty connective: " + std::string(template_text));
  return {std::string(template_text), text::join(words, " "), priority};
}

std::vector<DefinitionPattern> default_patterns() {
  const char* templates[] = {"{topic} is defined as {description}", "{topic} is a {description}",
                             "{topic} is an {description}",          "{topic} refers to {description}",
                             "{topic} refer to {description}",       "{topic} means {description}",
                             "{topic} stands for {description}"};
  std::vector<DefinitionPattern> out;
  int priority = 0;
  for (const char* t : templates) out.push_back(DefinitionPattern::parse(t, priority++));
  return out;
}

std::vector<DefinitionPattern> load_patterns(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pattern file " + path.string());
  const json j = json::parse(in);
  if (!j.is_array()) throw std::runtime_error("pattern file must hold a JSON list");
  std::vector<DefinitionPattern> out;
  for (const auto& p : j) {
    out.push_back(DefinitionPattern::parse(p.at("template").get<std::string>(), p.at("priority").get<int>()));
  }
  return by_priority(std::move(out));
}

OpinionLexicon OpinionLexicon::defaults() {
  return OpinionLexicon(std::set<std::string>(std::begin(kNegativeWords), std::end(kNegativeWords)),
                        std::set<std::string>(std::begin(kPositiveWords), std::end(kPositiveWords)));
}

OpinionLexicon OpinionLexicon::load(const std::filesystem::path& negative,
                                    const std::optional<std::filesystem::path>& positive) {
  auto read = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open lexicon " + p.string());
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
      const auto t = text::trim(line);
      if (t.empty() || t.front() == ';' || t.front() == '#') continue;
      words.insert(text::lower(t));
    }
    return words;
  };
  return OpinionLexicon(read(negative), positive ? read(*positive) : std::set<std::string>{});
}

OpinionLexicon::OpinionLexicon(std::set<std::string> negative, std::set<std::string> positive)
    : negative_(std::move(negative)), positive_(std::move(positive)) {
  for (const auto& w : negative_) {
    if (w != text::lower(w)) throw ContractError("lexicon entries must be lowercase: " + w);
    if (positive_.contains(w)) throw ContractError("word in both opinion sets: " + w);
  }
}

std::vector<std::string> opinion_tokens(std::string_view sentence) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    std::string_view t = cur;
    while (!t.empty() && (t.front() == '\'' || t.front() == '-')) t.remove_prefix(1);
    while (!t.empty() && (t.back() == '\'' || t.back() == '-')) t.remove_suffix(1);
    if (!t.empty()) out.push_back(text::lower(t));
    cur.clear();
  };
  for (char c : sentence) {
    if (text::is_space(c) || (text::is_punct(c) && c != '\'' && c != '-')) {
      flush();
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

OpinionVerdict opinion_filter(std::string_view sentence, const OpinionLexicon& lexicon) {
  for (const auto& w : opinion_tokens(sentence)) {
    if (lexicon.is_negative(w)) return {false, w};
  }
  return {true, {}};
}

std::optional<ExtractedTopic> extract_topic(std::string_view sentence, std::span<const DefinitionPattern> patterns) {
  const auto tokens = corpus::tokenize(sentence);
  std::vector<std::string> lowered;
  for (const auto& t : tokens) lowered.push_back(text::lower(t.surface));
  const auto match = find_connective(tokens, lowered, patterns);
  if (!match || match->first_token == 0) return std::nullopt;

  std::string_view prefix = sentence.substr(0, tokens[match->first_token].span.begin);
  if (const auto cut = prefix.find_last_of(",;:"); cut != std::string_view::npos) prefix.remove_prefix(cut + 1);
  prefix = strip_edges(prefix);

  auto words = text::split_ws(prefix);
  while (!words.empty() && kDeterminers.contains(text::lower(words.front()))) words.erase(words.begin());
  if (words.empty() || words.size() > 8) return std::nullopt;
  if (kPronouns.contains(text::lower(words.front()))) return std::nullopt;
  std::string topic(strip_edges(text::join(words, " ")));
  if (topic.empty()) return std::nullopt;

  std::string_view rest = sentence.substr(tokens[match->end_token - 1].span.end);
  rest = text::trim(rest);
  while (!rest.empty() && (rest.back() == '.' || rest.back() == '!' || rest.back() == '?')) rest.remove_suffix(1);
  rest = text::trim(rest);
  if (rest.empty()) return std::nullopt;

  return ExtractedTopic{std::move(topic), std::string(rest), patterns[match->pattern].id()};
}

SentenceClassifier::SentenceClassifier(Kind kind, std::vector<DefinitionPattern> patterns, std::uint32_t hash_dim)
    : kind_(kind), patterns_(by_priority(std::move(patterns))), hash_dim_(hash_dim) {
  if (kind_ == Kind::linear) {
    if (hash_dim_ == 0) throw ContractError("hash dimension must be positive");
    weights_.assign(static_cast<std::size_t>(hash_dim_) * kCategoryCount, 0.0);
  }
}

SentenceClassifier SentenceClassifier::rule_based(std::vector<DefinitionPattern> patterns) {
  return SentenceClassifier(Kind::rule_based, std::move(patterns), 0);
}

Classification SentenceClassifier::classify(std::string_view sentence) const {
  if (kind_ == Kind::rule_based) return classify_rules(sentence);
  const auto p = probabilities(sentence);
  const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  return {static_cast<DefinitionCategory>(best), p[best]};
}

Classification SentenceClassifier::classify_rules(std::string_view sentence) const {
  constexpr Classification kMiss{DefinitionCategory::NonDefinition, 0.5};
  std::vector<corpus::Token> tokens;
  for (auto& t : corpus::tokenize(sentence)) {
    if (is_word_token(t.surface)) tokens.push_back(std::move(t));
  }
  if (tokens.empty()) return kMiss;
  std::vector<std::string> lowered;
  for (const auto& t : tokens) lowered.push_back(text::lower(t.surface));

  if (kReferentialSubjects.contains(lowered[0])) return {DefinitionCategory::Referential, 1.0};

  const auto match = find_connective(tokens, lowered, patterns_);
  if (!match || match->first_token == 0) return kMiss;

  const std::string& connective = patterns_[match->pattern].connective;
  const bool all_capitalized = std::all_of(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(match->first_token),
                                           [](const corpus::Token& t) { return text::is_upper(t.surface[0]); });
  if ((connective == "is a" || connective == "is an") && match->first_token <= 3 && all_capitalized &&
      !kDeterminers.contains(lowered[0])) {
    const std::size_t stop = std::min(tokens.size(), match->end_token + 4);
    for (std::size_t i = match->end_token; i < stop; ++i) {
      if (kOccupationCues.contains(lowered[i])) return {DefinitionCategory::Personal, 1.0};
    }
  }

  if (kPronouns.contains(lowered[match->first_token - 1]) || kPronouns.contains(lowered[0])) return kMiss;
  return {DefinitionCategory::Sufficient, 1.0};
}

std::vector<std::uint32_t> sentence_features(std::string_view sentence, std::uint32_t dim) {
  std::vector<std::string> words;
  for (const auto& t : corpus::tokenize(sentence)) words.push_back(text::lower(t.surface));
  std::vector<std::uint32_t> out;
  auto add = [&](const std::string& f) { out.push_back(static_cast<std::uint32_t>(fnv1a(f) % dim)); };
  add("bias");
  add(length_bucket(words.size()));
  std::string prev = "<s>";
  for (const auto& w : words) {
    add("u=" + w);
    add("b=" + prev + "_" + w);
    prev = w;
  }
  add("b=" + prev + "_</s>");
  return out;
}

std::array<double, kCategoryCount> SentenceClassifier::probabilities(std::string_view sentence) const {
  if (kind_ != Kind::linear) throw ContractError("probabilities need a linear classifier");
  std::array<double, kCategoryCount> z{};
  for (std::uint32_t f : sentence_features(sentence, hash_dim_)) {
    for (std::size_t c = 0; c < kCategoryCount; ++c) z[c] += weights_[static_cast<std::size_t>(f) * kCategoryCount + c];
  }
  return softmax5(z);
}

void SentenceClassifier::save(const std::filesystem::path& path) const {
  json patterns = json::array();
  for (const auto& p : patterns_) patterns.push_back({{"template", p.template_text}, {"priority", p.priority}});
  json j = {{"kind", kind_ == Kind::linear ? "linear" : "rule_based"}, {"patterns", patterns}};
  if (kind_ == Kind::linear) {
    j["hash_dim"] = hash_dim_;
    json rows = json::object();
    for (std::size_t f = 0; f < hash_dim_; ++f) {
      const double* w = &weights_[f * kCategoryCount];
      if (std::all_of(w, w + kCategoryCount, [](double v) { return v == 0.0; })) continue;
      rows[std::to_string(f)] = std::vector<double>(w, w + kCategoryCount);
    }
    j["weights"] = std::move(rows);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write classifier " + path.string());
  out << j.dump() << '\n';
}

SentenceClassifier SentenceClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open classifier " + path.string());
  const json j = json::parse(in);
  std::vector<DefinitionPattern> patterns;
  for (const auto& p : j.at("patterns")) {
    patterns.push_back(DefinitionPattern::parse(p.at("template").get<std::string>(), p.at("priority").get<int>()));
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "rule_based") return rule_based(std::move(patterns));
  if (kind != "linear") throw std::runtime_error("unknown classifier kind " + kind);
  SentenceClassifier c(Kind::linear, std::move(patterns), j.at("hash_dim").get<std::uint32_t>());
  for (const auto& [idx, row] : j.at("weights").items()) {
    const auto f = std::stoul(idx);
    const auto values = row.get<std::vector<double>>();
    if (f >= c.hash_dim_ || values.size() != kCategoryCount) throw std::runtime_error("bad classifier weight row");
    std::copy(values.begin(), values.end(), c.weights_.begin() + static_cast<std::ptrdiff_t>(f * kCategoryCount));
  }
  return c;
}

SentenceClassifier train_sentence_classifier(std::span<const LabeledText> rows, const ClassifierConfig& config) {
  if (rows.empty()) throw ContractError("train_sentence_classifier needs data");
  std::set<DefinitionCategory> present;
  for (const auto& r : rows) present.insert(r.second);
  if (present.size() < 2) throw ContractError("train_sentence_classifier needs at least two categories");

  SentenceClassifier model(SentenceClassifier::Kind::linear, default_patterns(), config.hash_dim);
  std::vector<std::vector<std::uint32_t>> features;
  for (const auto& r : rows) features.push_back(sentence_features(r.first, config.hash_dim));

  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(config.seed);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      std::array<double, kCategoryCount> z{};
      for (std::uint32_t f : features[idx]) {
        for (std::size_t c = 0; c < kCategoryCount; ++c) z[c] += model.weights_[f * kCategoryCount + c];
      }
      auto p = softmax5(z);
      p[static_cast<std::size_t>(rows[idx].second)] -= 1.0;
      for (std::uint32_t f : features[idx]) {
        for (std::size_t c = 0; c < kCategoryCount; ++c) {
          model.weights_[f * kCategoryCount + c] -= config.learning_rate * p[c];
        }
      }
    }
  }
  return model;
}

std::vector<LabeledText> load_training_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open training data " + path.string());
  std::vector<LabeledText> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected category,text");
    const std::string_view head = std::string_view(line).substr(0, comma);
    if (line_no == 1 && text::lower(text::trim(head)) == "category") continue;
    try {
      out.emplace_back(std::string(text::trim(std::string_view(line).substr(comma + 1))), parse_category(head));
    } catch (const ContractError& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<DefinitionRecord> mine_definitions(const corpus::Document& doc, const SentenceClassifier& classifier,
                                               std::span<const DefinitionPattern> patterns,
                                               const OpinionLexicon& lexicon,
                                               const corpus::AbbreviationList& abbreviations) {
  std::vector<DefinitionRecord> out;
  for (const auto& sentence : corpus::split_sentences(doc, abbreviations)) {
    const auto cls = classifier.classify(sentence.text);
    if (cls.category != DefinitionCategory::Sufficient) continue;
    auto extracted = extract_topic(sentence.text, patterns);
    if (!extracted) continue;
    if (!opinion_filter(sentence.text, lexicon).keep) continue;
    auto key = topicrank::normalize_key(extracted->topic);
    if (!key) continue;
    out.push_back({std::move(*key), std::move(extracted->topic), sentence.text, std::move(extracted->description),
                   doc.doc_id, sentence.index, cls.category, std::move(extracted->pattern_id), cls.confidence});
  }
  return out;
}

PrfScores binary_prf(std::span<const int> predicted, std::span<const int> gold) {
  if (predicted.size() != gold.size()) throw ContractError("prediction and gold counts differ");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] == 1 && gold[i] == 1) ++tp;
    if (predicted[i] == 1 && gold[i] == 0) ++fp;
    if (predicted[i] == 0 && gold[i] == 1) ++fn;
  }
  PrfScores s;
  s.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

PrfScores evaluate_sufficient(const SentenceClassifier& classifier, std::span<const std::pair<std::string, int>> rows) {
  std::vector<int> predicted, gold;
  for (const auto& [sentence, label] : rows) {
    if (label != 0 && label != 1) throw ContractError("binary labels must be 0 or 1");
    predicted.push_back(classifier.classify(sentence).category == DefinitionCategory::Sufficient ? 1 : 0);
    gold.push_back(label);
  }
  const auto positives = std::count(gold.begin(), gold.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(gold.size())) {
    throw ContractError("evaluation needs both labels");
  }
  return binary_prf(predicted, gold);
}

PrfScores eval_rule_baseline(std::span<const std::pair<std::string, int>> rows,
                             std::span<const DefinitionPattern> patterns) {
  auto rules = SentenceClassifier::rule_based(patterns.empty() ? default_patterns()
                                                               : std::vector<DefinitionPattern>(patterns.begin(), patterns.end()));
  return evaluate_sufficient(rules, rows);
}

}  // namespace topicmine::defmine
