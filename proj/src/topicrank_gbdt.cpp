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
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "topicmine/common.hpp"
#include "topicmine/topicrank.hpp"

namespace topicmine::topicrank {

using nlohmann::json;

namespace {

constexpr double kMinHessian = 1e-12;
constexpr double kMinGain = 1e-12;

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct TreeBuilder {
  std::span<const LabeledFeatures> rows;
  const std::vector<double>& residual;
  const std::vector<double>& hessian;
  const GbdtConfig& config;
  RegressionTree tree;

  double leaf_value(std::span<const std::size_t> idx) const {
    double g = 0.0, h = 0.0;
    for (std::size_t i : idx) {
      g += residual[i];
      h += hessian[i];
    }
    return g / std::max(h, kMinHessian);
  }

  int build(std::vector<std::size_t> idx, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[id].value = leaf_value(idx);

    const std::size_t n = idx.size();
    const std::size_t min_leaf = std::max<std::size_t>(config.min_leaf_count, 1);
    if (depth >= config.max_depth || n < 2 * min_leaf) return id;

    double total = 0.0;
    for (std::size_t i : idx) total += residual[i];
    const double parent = total * total / static_cast<double>(n);

    int best_feature = -1;
    double best_gain = kMinGain;
    double best_threshold = 0.0;
    std::vector<std::size_t> order = idx;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = rows[a].features.values[f], vb = rows[b].features.values[f];
        return va != vb ? va < vb : a < b;
      });
      double left = 0.0;
      for (std::size_t k = 1; k < n; ++k) {
        left += residual[order[k - 1]];
        if (k < min_leaf || n - k < min_leaf) continue;
        const double lo = rows[order[k - 1]].features.values[f];
        const double hi = rows[order[k]].features.values[f];
        if (lo == hi) continue;
        const double right = total - left;
        const double gain = left * left / static_cast<double>(k) + right * right / static_cast<double>(n - k) - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = lo + (hi - lo) / 2.0;
          if (best_threshold >= hi) best_threshold = lo;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
      (rows[i].features.values[best_feature] <= best_threshold ? left_idx : right_idx).push_back(i);
    }
    tree.nodes[id].feature = best_feature;
    tree.nodes[id].threshold = best_threshold;
    const int l = build(std::move(left_idx), depth + 1);
    const int r = build(std::move(right_idx), depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  }
};

}  // namespace

const char* feature_name(Feature f) {
  switch (f) {
    case Feature::ner_freq: return "ner_freq";
    case Feature::doc_freq: return "doc_freq";
    case Feature::title_freq: return "title_freq";
    case Feature::ner_per_doc: return "ner_per_doc";
    case Feature::title_per_doc: return "title_per_doc";
    case Feature::title_per_ner: return "title_per_ner";
    case Feature::log1p_ner: return "log1p_ner";
    case Feature::log1p_doc: return "log1p_doc";
    case Feature::log1p_title: return "log1p_title";
  }
  return "?";
}

RankFeatures compute_features(const TopicCandidate& c) {
  if (c.document_frequency < 1 || c.ner_frequency < c.document_frequency || c.title_frequency > c.ner_frequency ||
      c.title_frequency < 0) {
    throw ContractError("candidate counters violate ner >= doc >= 1, title <= ner");
  }
  const double ner = static_cast<double>(c.ner_frequency);
  const double doc = static_cast<double>(c.document_frequency);
  const double title = static_cast<double>(c.title_frequency);
  RankFeatures f;
  f[Feature::ner_freq] = ner;
  f[Feature::doc_freq] = doc;
  f[Feature::title_freq] = title;
  f[Feature::ner_per_doc] = ner / doc;
  f[Feature::title_per_doc] = title / doc;
  f[Feature::title_per_ner] = title / ner;
  f[Feature::log1p_ner] = std::log1p(ner);
  f[Feature::log1p_doc] = std::log1p(doc);
  f[Feature::log1p_title] = std::log1p(title);
  return f;
}

double RegressionTree::predict(const RankFeatures& f) const {
  int id = 0;
  while (nodes[id].feature >= 0) {
    id = f.values[nodes[id].feature] <= nodes[id].threshold ? nodes[id].left : nodes[id].right;
  }
  return nodes[id].value;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature < 0) continue;
    d[nodes[i].left] = d[i] + 1;
    d[nodes[i].right] = d[i] + 1;
    deepest = std::max(deepest, d[i] + 1);
  }
  return deepest;
}

void GbdtModel::add_tree(RegressionTree tree) {
  if (tree.nodes.empty()) throw ContractError("empty regression tree");
  for (const auto& n : tree.nodes) {
    const bool leaf = n.feature < 0;
    if (!leaf && (n.feature >= static_cast<int>(kFeatureCount) || n.left <= 0 || n.right <= 0 ||
                  n.left >= static_cast<int>(tree.nodes.size()) || n.right >= static_cast<int>(tree.nodes.size()))) {
      throw ContractError("regression tree has an invalid split");
    }
  }
  trees_.push_back(std::move(tree));
}

double GbdtModel::margin(const RankFeatures& f) const {
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(f);
  return base_score_ + learning_rate_ * sum;
}

void GbdtModel::save(const std::filesystem::path& path) const {
  json trees = json::array();
  for (const auto& t : trees_) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
                       {"value", n.value}});
    }
    trees.push_back(std::move(nodes));
  }
  json features = json::array();
  for (std::size_t i = 0; i < kFeatureCount; ++i) features.push_back(feature_name(static_cast<Feature>(i)));
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write ranker model " + path.string());
  out << json{{"base_score", base_score_}, {"learning_rate", learning_rate_}, {"features", features},
              {"trees", trees}}
             .dump(1)
      << '\n';
}

GbdtModel GbdtModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ranker model " + path.string());
  const json j = json::parse(in);
  if (j.at("features").size() != kFeatureCount) throw std::runtime_error("ranker model feature set mismatch");
  GbdtModel model(j.at("base_score").get<double>(), j.at("learning_rate").get<double>());
  for (const auto& nodes : j.at("trees")) {
    RegressionTree t;
    for (const auto& n : nodes) {
      t.nodes.push_back({n.at("feature").get<int>(), n.at("threshold").get<double>(), n.at("left").get<int>(),
                         n.at("right").get<int>(), n.at("value").get<double>()});
    }
    model.add_tree(std::move(t));
  }
  return model;
}

GbdtModel train_gbdt(std::span<const LabeledFeatures> rows, const GbdtConfig& config) {
  if (config.num_trees < 0 || config.max_depth < 0 || !(config.learning_rate > 0.0) || !(config.subsample > 0.0) ||
      config.subsample > 1.0) {
    throw ContractError("invalid boosting configuration");
  }
  std::size_t positives = 0;
  for (const auto& r : rows) {
    if (r.label != 0 && r.label != 1) throw ContractError("labels must be 0 or 1");
    positives += static_cast<std::size_t>(r.label);
  }
  if (positives == 0 || positives == rows.size()) throw ContractError("train_gbdt needs both classes");

  const double prior = static_cast<double>(positives) / static_cast<double>(rows.size());
  GbdtModel model(std::log(prior / (1.0 - prior)), config.learning_rate);

  const std::size_t n = rows.size();
  std::vector<double> margin(n, model.base_score());
  std::vector<double> residual(n), hessian(n);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const std::size_t sample_size =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(config.subsample * static_cast<double>(n))));
  Rng rng(config.seed);

  for (int t = 0; t < config.num_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      residual[i] = rows[i].label - p;
      hessian[i] = p * (1.0 - p);
    }
    std::vector<std::size_t> sample = all;
    if (sample_size < n) {
      rng.shuffle(sample);
      sample.resize(sample_size);
      std::sort(sample.begin(), sample.end());
    }
    TreeBuilder builder{rows, residual, hessian, config, {}};
    builder.build(std::move(sample), 0);
    for (std::size_t i = 0; i < n; ++i) margin[i] += config.learning_rate * builder.tree.predict(rows[i].features);
    model.add_tree(std::move(builder.tree));
  }
  return model;
}

double score_topic(const GbdtModel& model, const RankFeatures& features) { return sigmoid(model.margin(features)); }

RankedTopicList rerank_and_filter(std::span<const std::string> shortlist_keys, const CandidateStore& store,
                                  const GbdtModel& model, std::size_t top_k, double min_score) {
  RankedTopicList out;
  out.shortlist_size = shortlist_keys.size();
  out.top_k = top_k;
  out.min_score = min_score;
  for (const auto& key : shortlist_keys) {
    const TopicCandidate* c = store.find(key);
    if (!c) continue;
    out.entries.push_back({key, score_topic(model, compute_features(*c))});
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const RankedTopic& a, const RankedTopic& b) {
    return a.score != b.score ? a.score > b.score : a.key < b.key;
  });
  if (out.entries.size() > top_k) out.entries.resize(top_k);
  std::erase_if(out.entries, [&](const RankedTopic& e) { return e.score < min_score; });
  return out;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ContractError("scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0 && labels[order[k]] != 1) throw ContractError("labels must be 0 or 1");
      if (labels[order[k]] == 1) {
        positive_rank_sum += mid_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) throw ContractError("auc needs both classes");
  const double p = static_cast<double>(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

std::map<std::string, int> load_label_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label file " + path.string());
  std::map<std::string, int> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected key,label");
    const auto value = text::trim(std::string_view(line).substr(comma + 1));
    if (value != "0" && value != "1") {
      if (line_no == 1) continue;  // header
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": label must be 0 or 1");
    }
    auto key = normalize_key(std::string_view(line).substr(0, comma));
    if (!key) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": empty key");
    out[*key] = value == "1" ? 1 : 0;
  }
  return out;
}

std::vector<LabeledFeatures> training_rows(const CandidateStore& store, const std::map<std::string, int>& labels) {
  std::vector<LabeledFeatures> rows;
  for (const auto& [key, label] : labels) {
    if (const auto* c = store.find(key)) rows.push_back({compute_features(*c), label});
  }
  return rows;
}

}  // namespace topicmine::topicrank
