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

#include <cmath>
#include <limits>

#include "topicmine/common.hpp"
#include "topicmine/nertag.hpp"

namespace topicmine::nertag {

LabelSet LabelSet::defaults() {
  return LabelSet({"person", "organization", "location", "product", "project", "field_of_study", "creative_work",
                   "event"});
}

LabelSet::LabelSet(std::vector<std::string> types) : types_(std::move(types)) {
  if (types_.empty()) throw ContractError("label set needs at least one entity type");
  names_.reserve(2 * types_.size() + 1);
  names_.push_back("O");
  for (const auto& t : types_) {
    if (t.empty()) throw ContractError("empty entity type name");
    names_.push_back("B-" + t);
    names_.push_back("I-" + t);
  }
}

Label LabelSet::ordinal(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<Label>(i);
  }
  throw ContractError("unknown label '" + std::string(name) + "'");
}

std::size_t LabelSet::type_index(std::string_view type) const {
  for (std::size_t i = 0; i < types_.size(); ++i) {
    if (types_[i] == type) return i;
  }
  throw ContractError("unknown entity type '" + std::string(type) + "'");
}

bool LabelSet::valid(std::span<const Label> labels) const {
  Label prev = outside();
  for (Label l : labels) {
    if (l >= size() || !can_follow(prev, l)) return false;
    prev = l;
  }
  return true;
}

bool ScoreMatrix::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double path_score(const ScoreMatrix& scores, std::span<const Label> labels) {
  double total = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) total += scores(t, labels[t]);
  return total;
}

std::vector<Label> viterbi_decode(const ScoreMatrix& scores, const LabelSet& labels) {
  const std::size_t n = scores.rows();
  const std::size_t width = labels.size();
  if (n == 0) throw ContractError("viterbi_decode needs at least one token");
  if (scores.cols() != width) throw ContractError("score matrix width does not match the label set");

  constexpr double kInvalid = -std::numeric_limits<double>::infinity();
  std::vector<double> best(n * width, kInvalid);
  std::vector<Label> back(n * width, 0);

  for (Label l = 0; l < width; ++l) {
    if (LabelSet::can_follow(LabelSet::outside(), l)) best[l] = scores(0, l);
  }

  for (std::size_t t = 1; t < n; ++t) {
    const double* prev = &best[(t - 1) * width];
    double* cur = &best[t * width];
    Label* from = &back[t * width];

    // O and B-t may follow anything: one shared argmax, smallest ordinal on ties.
    Label arg_all = 0;
    for (Label p = 1; p < width; ++p) {
      if (prev[p] > prev[arg_all]) arg_all = p;
    }
    for (Label l = 0; l < width; ++l) {
      Label arg = arg_all;
      if (LabelSet::is_inside(l)) {
        const Label b = l - 1;  // B of the same type, lower ordinal
        arg = prev[l] > prev[b] ? l : b;
      }
      if (prev[arg] == kInvalid) continue;
      cur[l] = prev[arg] + scores(t, l);
      from[l] = arg;
    }
  }

  const double* last = &best[(n - 1) * width];
  Label arg = 0;
  for (Label l = 1; l < width; ++l) {
    if (last[l] > last[arg]) arg = l;
  }

  std::vector<Label> path(n);
  path[n - 1] = arg;
  for (std::size_t t = n - 1; t > 0; --t) path[t - 1] = back[t * width + path[t]];
  return path;
}

std::vector<Label> greedy_decode(const ScoreMatrix& scores, const LabelSet& labels) {
  const std::size_t n = scores.rows();
  if (n == 0) throw ContractError("greedy_decode needs at least one token");
  if (scores.cols() != labels.size()) throw ContractError("score matrix width does not match the label set");

  std::vector<Label> path(n);
  Label prev = LabelSet::outside();
  for (std::size_t t = 0; t < n; ++t) {
    Label arg = 0;
    for (Label l = 1; l < labels.size(); ++l) {
      if (scores(t, l) > scores(t, arg)) arg = l;
    }
    if (!LabelSet::can_follow(prev, arg)) arg = LabelSet::outside();
    path[t] = arg;
    prev = arg;
  }
  return path;
}

std::vector<Mention> extract_mentions(const corpus::Sentence& sentence, const std::vector<corpus::Token>& tokens,
                                      std::span<const Label> labels, const LabelSet& label_set,
                                      const ScoreMatrix* scores) {
  if (labels.size() != tokens.size()) throw ContractError("label count does not match token count");
  if (!label_set.valid(labels)) throw ContractError("label sequence is not BIO-valid");

  std::vector<Mention> out;
  std::size_t t = 0;
  while (t < labels.size()) {
    if (!LabelSet::is_begin(labels[t])) {
      ++t;
      continue;
    }
    std::size_t end = t + 1;
    while (end < labels.size() && LabelSet::is_inside(labels[end])) ++end;

    Mention m;
    m.doc_id = sentence.doc_id;
    m.sentence_index = sentence.index;
    m.token_begin = t;
    m.token_end = end;
    m.char_span = {tokens[t].span.begin, tokens[end - 1].span.end};
    m.entity_type = LabelSet::type_of(labels[t]);
    m.from_title = sentence.from_title;
    for (std::size_t k = t; k < end; ++k) {
      if (k > t) m.surface += ' ';
      m.surface += tokens[k].surface;
      if (scores) m.score += (*scores)(k, labels[k]);
    }
    out.push_back(std::move(m));
    t = end;
  }
  return out;
}

}  // namespace topicmine::nertag
