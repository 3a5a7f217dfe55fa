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

#include <fstream>
#include <set>

#include <json.hpp>

#include "topicmine/common.hpp"
#include "topicmine/nertag.hpp"

namespace topicmine::nertag {

using nlohmann::json;

std::vector<LabeledSentence> augment(std::span<const LabeledSentence> data, AugmentMode mode, const LabelSet& labels,
                                     const EntityBank& bank, std::uint64_t seed) {
  for (const auto& s : data) {
    if (s.tokens.size() != s.labels.size() || !labels.valid(s.labels)) {
      throw ContractError("augment input has an invalid gold sequence");
    }
  }

  // Replacement surfaces pre-tokenized per type ordinal.
  std::vector<std::vector<std::vector<std::string>>> replacements(labels.type_count());
  if (mode == AugmentMode::entity_replace) {
    std::set<std::size_t> present;
    for (const auto& s : data) {
      for (Label l : s.labels) {
        if (LabelSet::is_begin(l)) present.insert(LabelSet::type_of(l));
      }
    }
    for (std::size_t type : present) {
      const auto& name = labels.types()[type];
      auto it = bank.find(name);
      if (it == bank.end() || it->second.empty()) {
        throw ContractError("entity bank has no surfaces for type '" + name + "'");
      }
      for (const auto& surface : it->second) {
        auto words = corpus::surfaces(corpus::tokenize(surface));
        if (words.empty()) throw ContractError("entity bank has an empty surface for type '" + name + "'");
        replacements[type].push_back(std::move(words));
      }
    }
  }

  std::vector<LabeledSentence> out(data.begin(), data.end());
  out.reserve(2 * data.size());
  Rng rng(seed);
  for (const auto& s : data) {
    LabeledSentence copy;
    copy.from_title = s.from_title;
    if (mode == AugmentMode::lowercase) {
      for (const auto& w : s.tokens) copy.tokens.push_back(text::lower(w));
      copy.labels = s.labels;
    } else {
      std::size_t t = 0;
      while (t < s.tokens.size()) {
        if (!LabelSet::is_begin(s.labels[t])) {
          copy.tokens.push_back(s.tokens[t]);
          copy.labels.push_back(s.labels[t]);
          ++t;
          continue;
        }
        const std::size_t type = LabelSet::type_of(s.labels[t]);
        std::size_t end = t + 1;
        while (end < s.tokens.size() && LabelSet::is_inside(s.labels[end])) ++end;
        const auto& pool = replacements[type];
        const auto& words = pool[rng.index(pool.size())];
        for (std::size_t k = 0; k < words.size(); ++k) {
          copy.tokens.push_back(words[k]);
          copy.labels.push_back(k == 0 ? LabelSet::begin(type) : LabelSet::inside(type));
        }
        t = end;
      }
    }
    out.push_back(std::move(copy));
  }
  return out;
}

EntityBank load_entity_bank(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open entity bank " + path.string());
  const json j = json::parse(in);
  if (!j.is_object()) throw std::runtime_error("entity bank must be a JSON object");
  EntityBank bank;
  for (const auto& [type, surfaces] : j.items()) bank[type] = surfaces.get<std::vector<std::string>>();
  return bank;
}

std::vector<LabeledSentence> load_labeled_sentences(const std::filesystem::path& path, const LabelSet& labels) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open labeled data " + path.string());
  std::vector<LabeledSentence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      LabeledSentence s;
      s.tokens = j.at("tokens").get<std::vector<std::string>>();
      for (const auto& name : j.at("labels")) s.labels.push_back(labels.ordinal(name.get<std::string>()));
      s.from_title = j.value("from_title", false);
      if (s.tokens.size() != s.labels.size()) throw ContractError("token and label counts differ");
      if (!labels.valid(s.labels)) throw ContractError("gold sequence is not BIO-valid");
      out.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_labeled_sentences(const std::filesystem::path& path, std::span<const LabeledSentence> data,
                            const LabelSet& labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write labeled data " + path.string());
  for (const auto& s : data) {
    json names = json::array();
    for (Label l : s.labels) names.push_back(labels.name(l));
    json j = {{"tokens", s.tokens}, {"labels", names}};
    if (s.from_title) j["from_title"] = true;
    out << j.dump() << '\n';
  }
}

std::vector<ExternalScores> load_score_file(const std::filesystem::path& path, const LabelSet& labels) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open score file " + path.string());
  std::vector<ExternalScores> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      ExternalScores rec;
      rec.doc_id = j.at("doc_id").get<std::string>();
      rec.sentence_index = j.at("sentence_index").get<std::size_t>();
      const auto names = j.at("labels").get<std::vector<std::string>>();
      if (names.size() != labels.size()) throw ContractError("score file label list does not match the label set");
      std::vector<Label> column(names.size());
      std::set<Label> seen;
      for (std::size_t c = 0; c < names.size(); ++c) {
        column[c] = labels.ordinal(names[c]);
        if (!seen.insert(column[c]).second) throw ContractError("duplicate label '" + names[c] + "'");
      }
      const auto& rows = j.at("scores");
      rec.scores = ScoreMatrix(rows.size(), labels.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto row = rows[r].get<std::vector<double>>();
        if (row.size() != names.size()) throw ContractError("score row width mismatch");
        for (std::size_t c = 0; c < row.size(); ++c) rec.scores(r, column[c]) = row[c];
      }
      if (!rec.scores.all_finite()) throw ContractError("non-finite score");
      out.push_back(std::move(rec));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace topicmine::nertag
