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

#include <json.hpp>

#include "topicmine/common.hpp"
#include "topicmine/nertag.hpp"

namespace topicmine::nertag {

namespace {

constexpr char kMagic[8] = {'T', 'M', 'T', 'A', 'G', 'G', 'E', 'R'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr double kMinProb = 1e-12;

}  // namespace

std::string word_shape(std::string_view word) {
  std::string shape;
  for (char c : word) {
    char m = c;
    if (text::is_upper(c)) {
      m = 'X';
    } else if (text::is_lower(c)) {
      m = 'x';
    } else if (text::is_digit(c)) {
      m = '9';
    }
    if (shape.empty() || shape.back() != m) shape += m;
  }
  return shape;
}

std::vector<std::string> feature_strings(std::span<const std::string> words, std::size_t index, bool from_title) {
  if (index >= words.size()) throw ContractError("token index out of range");
  const std::string lw = text::lower(words[index]);
  std::vector<std::string> f;
  f.reserve(12);
  f.push_back("bias");
  f.push_back("w=" + lw);
  f.push_back("shape=" + word_shape(words[index]));
  for (std::size_t k = 1; k <= 3 && k <= lw.size(); ++k) {
    f.push_back("p" + std::to_string(k) + "=" + lw.substr(0, k));
    f.push_back("s" + std::to_string(k) + "=" + lw.substr(lw.size() - k));
  }
  f.push_back("prev=" + (index == 0 ? std::string("<s>") : text::lower(words[index - 1])));
  f.push_back("next=" + (index + 1 == words.size() ? std::string("</s>") : text::lower(words[index + 1])));
  f.push_back(from_title ? "title=1" : "title=0");
  return f;
}

std::vector<std::uint32_t> featurize(std::span<const std::string> words, std::size_t index, bool from_title,
                                     std::uint32_t dim) {
  if (dim == 0) throw ContractError("hash dimension must be positive");
  std::vector<std::uint32_t> out;
  for (const auto& s : feature_strings(words, index, from_title)) {
    out.push_back(static_cast<std::uint32_t>(fnv1a(s) % dim));
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (auto& v : p) {
    v = std::exp(v - mx);
    z += v;
  }
  for (auto& v : p) v /= z;
  return p;
}

FocalLoss focal_loss(std::span<const double> probs, Label gold, double gamma) {
  if (gamma < 0.0) throw ContractError("focal gamma must be non-negative");
  if (gold >= probs.size()) throw ContractError("gold label out of range");

  const double p = std::max(probs[gold], kMinProb);
  const double q = 1.0 - std::min(probs[gold], 1.0);
  const double log_p = std::log(p);

  FocalLoss out;
  out.loss = q > 0.0 ? -std::pow(q, gamma) * log_p : 0.0;

  // dL/dp * p, with dp/dz_j = p (delta_gj - p_j):
  //   dL/dz_j = [gamma q^(gamma-1) p log p - q^gamma] (delta_gj - p_j)
  double scale = 0.0;
  if (q > 0.0) {
    const double q_gamma = std::pow(q, gamma);
    scale = (gamma > 0.0 ? gamma * q_gamma / q * p * log_p : 0.0) - q_gamma;
  }
  out.gradient.resize(probs.size());
  for (std::size_t j = 0; j < probs.size(); ++j) {
    out.gradient[j] = scale * ((j == gold ? 1.0 : 0.0) - probs[j]);
  }
  return out;
}

TaggerModel::TaggerModel(LabelSet labels, std::uint32_t hash_dim, double gamma)
    : labels_(std::move(labels)), hash_dim_(hash_dim), gamma_(gamma) {
  if (hash_dim_ == 0) throw ContractError("hash dimension must be positive");
  if (gamma_ < 0.0) throw ContractError("focal gamma must be non-negative");
  weights_.assign(static_cast<std::size_t>(hash_dim_) * labels_.size(), 0.0);
}

std::vector<double> TaggerModel::logits(std::span<const std::uint32_t> features) const {
  const std::size_t width = labels_.size();
  std::vector<double> z(width, 0.0);
  for (std::uint32_t f : features) {
    const double* w = &weights_[static_cast<std::size_t>(f) * width];
    for (std::size_t l = 0; l < width; ++l) z[l] += w[l];
  }
  return z;
}

ScoreMatrix TaggerModel::score_tokens(std::span<const std::string> words, bool from_title) const {
  ScoreMatrix out(words.size(), labels_.size());
  for (std::size_t t = 0; t < words.size(); ++t) {
    const auto z = logits(featurize(words, t, from_title, hash_dim_));
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t l = 0; l < z.size(); ++l) out(t, l) = z[l] - lse;
  }
  return out;
}

void TaggerModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write tagger model " + path.string());
  nlohmann::json meta = {{"types", labels_.types()},
                         {"hash_dim", hash_dim_},
                         {"gamma", gamma_},
                         {"training_loss", training_loss_}};
  const std::string header = meta.dump();
  out.write(kMagic, sizeof kMagic);
  binio::write_u32(out, kFormatVersion);
  binio::write_u32(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (double w : weights_) binio::write_f64(out, w);
  if (!out) throw std::runtime_error("failed writing tagger model " + path.string());
}

TaggerModel TaggerModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open tagger model " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kMagic)) {
    throw std::runtime_error(path.string() + " is not a tagger model");
  }
  if (binio::read_u32(in) != kFormatVersion) throw std::runtime_error("unsupported tagger model version");
  std::string header(binio::read_u32(in), '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header.size()))) {
    throw std::runtime_error("truncated tagger model header");
  }
  const auto meta = nlohmann::json::parse(header);
  TaggerModel model(LabelSet(meta.at("types").get<std::vector<std::string>>()), meta.at("hash_dim").get<std::uint32_t>(),
                    meta.at("gamma").get<double>());
  model.training_loss_ = meta.value("training_loss", 0.0);
  for (auto& w : model.weights_) {
    w = binio::read_f64(in);
    if (!std::isfinite(w)) throw std::runtime_error("non-finite weight in tagger model");
  }
  return model;
}

TaggerModel train_tagger(std::span<const LabeledSentence> data, const LabelSet& labels, const TaggerConfig& config) {
  if (data.empty()) throw ContractError("train_tagger needs at least one labeled sentence");
  if (config.epochs < 0 || !(config.learning_rate > 0.0)) throw ContractError("invalid training schedule");
  for (const auto& s : data) {
    if (s.tokens.size() != s.labels.size()) throw ContractError("token and label counts differ");
    if (!labels.valid(s.labels)) throw ContractError("gold sequence is not BIO-valid");
  }

  TaggerModel model(labels, config.hash_dim, config.gamma);
  const std::size_t width = labels.size();

  struct Example {
    std::vector<std::uint32_t> features;
    Label gold;
  };
  std::vector<Example> examples;
  for (const auto& s : data) {
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      examples.push_back({featurize(s.tokens, t, s.from_title, config.hash_dim), s.labels[t]});
    }
  }
  if (examples.empty()) throw ContractError("train_tagger needs at least one token");

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(config.seed);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t idx : order) {
      const Example& ex = examples[idx];
      const auto probs = softmax(model.logits(ex.features));
      const auto fl = focal_loss(probs, ex.gold, config.gamma);
      total += fl.loss;
      for (std::uint32_t f : ex.features) {
        double* w = &model.weights_[static_cast<std::size_t>(f) * width];
        for (std::size_t l = 0; l < width; ++l) w[l] -= config.learning_rate * fl.gradient[l];
      }
    }
    model.training_loss_ = total / static_cast<double>(examples.size());
  }
  return model;
}

std::vector<Mention> tag_sentence(const TaggerModel& model, const corpus::Sentence& sentence,
                                  const std::vector<corpus::Token>& tokens) {
  if (tokens.empty()) return {};
  const auto words = corpus::surfaces(tokens);
  const auto scores = model.score_tokens(words, sentence.from_title);
  const auto path = viterbi_decode(scores, model.labels());
  return extract_mentions(sentence, tokens, path, model.labels(), &scores);
}

}  // namespace topicmine::nertag
