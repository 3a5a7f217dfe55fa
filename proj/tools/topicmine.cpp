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
#include <cstdio>
#include <limits>
#include <optional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "topicmine/common.hpp"
#include "topicmine/pipeline.hpp"

namespace {

using namespace topicmine;
namespace fs = std::filesystem;

constexpr int kConfigError = 2;
constexpr int kStageError = 3;

struct Options {
  pipeline::PipelineConfig config;
  std::string state_dir;
  std::int64_t created_at = -1;
  double tau_fraction = 0.6;

  // Per-subcommand inputs.
  std::string data, labels, events, entity_bank, def_data;
  std::vector<std::string> augment;
  int epochs = -1;
  double gamma = 1.6;
  int hash_bits = 18;
  int trees = 100, depth = 3, min_leaf = 5;
  double learning_rate = 0.1;
  std::size_t viterbi_trials = 1000;
};

void need(const std::string& value, const char* flag) {
  if (value.empty()) throw pipeline::ConfigError(std::string(flag) + " is required");
}

pipeline::PipelineConfig finalized(const Options& o) {
  auto c = o.config;
  c.conflation.tau_fraction = o.tau_fraction;
  if (o.created_at >= 0) c.created_at = o.created_at;
  return c;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_ingest(const Options& o) {
  need(o.config.corpus.string(), "--corpus");
  const auto r = corpus::ingest_jsonl(o.config.corpus);
  std::size_t sentences = 0, deleted = 0;
  for (const auto& d : r.documents) {
    sentences += corpus::split_sentences(d).size();
    deleted += d.deleted ? 1 : 0;
  }
  std::cout << "documents: " << r.documents.size() << " (" << deleted << " marked deleted)\n"
            << "sentences: " << sentences << '\n'
            << "errors: " << r.errors.size() << '\n';
  for (const auto& e : r.errors) std::cout << "  line " << e.line << ": " << e.reason << '\n';
  return 0;
}

int cmd_train_tagger(const Options& o) {
  need(o.data, "--data");
  need(o.config.out_dir.string(), "--out");
  const nertag::LabelSet labels(o.config.entity_types);
  auto data = nertag::load_labeled_sentences(o.data, labels);
  const nertag::EntityBank bank = o.entity_bank.empty() ? nertag::EntityBank{} : nertag::load_entity_bank(o.entity_bank);
  for (const auto& mode : o.augment) {
    const auto m = mode == "lowercase" ? nertag::AugmentMode::lowercase : nertag::AugmentMode::entity_replace;
    data = nertag::augment(data, m, labels, bank, o.config.seed);
  }
  nertag::TaggerConfig cfg;
  cfg.gamma = o.gamma;
  cfg.seed = o.config.seed;
  cfg.hash_dim = 1u << o.hash_bits;
  if (o.epochs > 0) cfg.epochs = o.epochs;
  const auto model = nertag::train_tagger(data, labels, cfg);
  model.save(o.config.out_dir);
  std::cout << "trained on " << data.size() << " sentences, final loss " << model.training_loss() << '\n';
  return 0;
}

int cmd_train_ranker(const Options& o) {
  need(o.labels, "--labels");
  need(o.state_dir, "--state");
  need(o.config.out_dir.string(), "--out");
  const auto state = pipeline::PipelineState::load(o.state_dir);
  const auto rows = topicrank::training_rows(state.store, topicrank::load_label_file(o.labels));
  topicrank::GbdtConfig cfg;
  cfg.num_trees = o.trees;
  cfg.max_depth = o.depth;
  cfg.min_leaf_count = static_cast<std::size_t>(o.min_leaf);
  cfg.learning_rate = o.learning_rate;
  cfg.seed = o.config.seed;
  const auto model = topicrank::train_gbdt(rows, cfg);
  model.save(o.config.out_dir);
  std::vector<double> scores;
  std::vector<int> y;
  for (const auto& r : rows) {
    scores.push_back(model.margin(r.features));
    y.push_back(r.label);
  }
  std::cout << "trained on " << rows.size() << " labelled candidates, training AUC " << topicrank::auc(scores, y)
            << '\n';
  return 0;
}

int cmd_train_defclassifier(const Options& o) {
  need(o.data, "--data");
  need(o.config.out_dir.string(), "--out");
  const auto rows = defmine::load_training_csv(o.data);
  defmine::ClassifierConfig cfg;
  cfg.seed = o.config.seed;
  if (o.epochs > 0) cfg.epochs = o.epochs;
  const auto model = defmine::train_sentence_classifier(rows, cfg);
  model.save(o.config.out_dir);
  std::cout << "trained on " << rows.size() << " sentences\n";
  return 0;
}

int cmd_mine(const Options& o) {
  need(o.config.out_dir.string(), "--out");
  const auto config = finalized(o);
  const auto components = pipeline::load_components(config);
  const auto run = pipeline::run_full(config, components);
  if (!o.state_dir.empty()) run.state.save(o.state_dir);
  print_warnings(run.kb.manifest.warnings);
  std::cout << "documents: " << run.state.documents.size() << "\ncandidates: " << run.state.store.size()
            << "\ncards: " << run.kb.cards.size() << "\nrun id: " << run.kb.manifest.run_id << '\n';
  return 0;
}

int cmd_update(const Options& o) {
  need(o.events, "--events");
  need(o.state_dir, "--state");
  const auto config = finalized(o);
  const auto components = pipeline::load_components(config);
  auto state = pipeline::PipelineState::load(o.state_dir);
  const auto events = pipeline::load_events(o.events);
  std::size_t changed = 0;
  const std::size_t warned = state.warnings.size();
  for (const auto& e : events) changed += pipeline::apply_update(state, e, components) ? 1 : 0;
  state.save(o.state_dir);
  print_warnings(std::vector<std::string>(state.warnings.begin() + static_cast<std::ptrdiff_t>(warned), state.warnings.end()));
  std::cout << "events: " << events.size() << ", applied: " << changed << ", documents: " << state.documents.size()
            << '\n';
  return 0;
}

int cmd_refresh(const Options& o) {
  need(o.state_dir, "--state");
  const auto config = finalized(o);
  const auto components = pipeline::load_components(config);
  auto state = pipeline::PipelineState::load(o.state_dir);
  const auto& ranked = pipeline::rank_refresh(state, config, components);
  state.save(o.state_dir);
  std::cout << "shortlist: " << ranked.shortlist_size << ", kept: " << ranked.entries.size() << '\n';
  for (const auto& e : ranked.entries) std::cout << "  " << e.score << '\t' << e.key << '\n';
  return 0;
}

int cmd_export(const Options& o) {
  need(o.state_dir, "--state");
  need(o.config.out_dir.string(), "--out");
  const auto config = finalized(o);
  const auto state = pipeline::PipelineState::load(o.state_dir);
  const auto kb = pipeline::build_kb(state, config);
  pipeline::export_kb(kb, config.out_dir);
  print_warnings(kb.manifest.warnings);
  std::cout << "cards: " << kb.cards.size() << "\nrun id: " << kb.manifest.run_id << '\n';
  return 0;
}

// Exhaustive best valid BIO path, for small matrices only.
double brute_force_best(const nertag::ScoreMatrix& s, const nertag::LabelSet& labels) {
  const std::size_t t = s.rows(), l = s.cols();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<nertag::Label> seq(t, 0);
  while (true) {
    if (labels.valid(seq)) best = std::max(best, nertag::path_score(s, seq));
    std::size_t k = 0;
    while (k < t && ++seq[k] == l) seq[k++] = 0;
    if (k == t) break;
  }
  return best;
}

int cmd_eval(const Options& o) {
  const nertag::LabelSet small({"person", "organization"});
  Rng rng(o.config.seed);
  std::size_t exact = 0;
  for (std::size_t trial = 0; trial < o.viterbi_trials; ++trial) {
    nertag::ScoreMatrix s(1 + rng.index(6), small.size());
    for (std::size_t r = 0; r < s.rows(); ++r) {
      for (std::size_t c = 0; c < s.cols(); ++c) s(r, c) = rng.gaussian();
    }
    const auto path = nertag::viterbi_decode(s, small);
    exact += small.valid(path) && std::abs(nertag::path_score(s, path) - brute_force_best(s, small)) <= 1e-9 ? 1 : 0;
  }
  std::cout << "viterbi: " << exact << "/" << o.viterbi_trials << " random matrices decoded optimally\n";

  if (!o.labels.empty() && !o.state_dir.empty()) {
    const auto state = pipeline::PipelineState::load(o.state_dir);
    const auto rows = topicrank::training_rows(state.store, topicrank::load_label_file(o.labels));
    std::vector<double> freq, model_scores;
    std::vector<int> y;
    const auto model = o.config.ranker_model.empty() ? std::optional<topicrank::GbdtModel>()
                                                     : topicrank::GbdtModel::load(o.config.ranker_model);
    for (const auto& r : rows) {
      freq.push_back(r.features[topicrank::Feature::ner_freq]);
      if (model) model_scores.push_back(model->margin(r.features));
      y.push_back(r.label);
    }
    std::cout << "ranker: ner_frequency AUC " << topicrank::auc(freq, y);
    if (model) std::cout << ", model AUC " << topicrank::auc(model_scores, y);
    std::cout << " (" << rows.size() << " labelled candidates)\n";
  }

  if (!o.def_data.empty()) {
    const auto rows = defmine::load_training_csv(o.def_data);
    std::vector<std::pair<std::string, int>> binary;
    for (const auto& [s, c] : rows) binary.emplace_back(s, c == defmine::DefinitionCategory::Sufficient ? 1 : 0);
    const auto rule = defmine::eval_rule_baseline(binary);
    std::cout << "definitions: rule F1 " << rule.f1 << " P " << rule.precision << " R " << rule.recall;
    if (!o.config.classifier_model.empty()) {
      const auto model = defmine::SentenceClassifier::load(o.config.classifier_model);
      const auto s = defmine::evaluate_sufficient(model, binary);
      std::cout << "; classifier F1 " << s.f1 << " P " << s.precision << " R " << s.recall;
    }
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mine a corpus of documents into a knowledge base of topic cards."};
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "INI file with option values; command-line flags take precedence");
  app.fallthrough();
  app.require_subcommand(1);

  Options o;
  auto& c = o.config;
  std::string corpus, out, tagger, scores, ranker, classifier, patterns, neg, pos, abbr;
  app.add_option("--corpus", corpus, "JSONL corpus");
  app.add_option("--out", out, "Output path (model file or knowledge-base directory)");
  app.add_option("--state", o.state_dir, "Pipeline state directory");
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_option("--top-n", c.top_n, "Shortlist size by NER frequency")->capture_default_str();
  app.add_option("--top-k", c.top_k, "Topics kept after ranking")->capture_default_str();
  app.add_option("--min-score", c.min_score, "Minimum ranker score")->capture_default_str();
  app.add_option("--card-k", c.card_k, "Related items per card list")->capture_default_str();
  app.add_option("--mem-budget", c.svd.memory_budget, "Factorization memory budget in bytes")->capture_default_str();
  app.add_option("--svd-rank", c.svd.rank, "Embedding dimension")->capture_default_str();
  app.add_option("--svd-oversample", c.svd.oversample, "Randomized SVD oversampling")->capture_default_str();
  app.add_option("--svd-power", c.svd.power_iterations, "Randomized SVD power iterations")->capture_default_str();
  app.add_option("--svd-batch", c.svd.batch_size, "Documents per factorization batch")->capture_default_str();
  app.add_option("--tau-fraction", o.tau_fraction, "Conflation threshold as a fraction of the max relatedness")
      ->capture_default_str();
  app.add_option("--entity-types", c.entity_types, "Entity type names")->delimiter(',');
  app.add_option("--tagger-model", tagger, "Trained tagger model");
  app.add_option("--score-file", scores, "External token score file (instead of a tagger model)");
  app.add_option("--ranker-model", ranker, "Trained ranker model (default: rank by NER frequency)");
  app.add_option("--classifier-model", classifier, "Trained sentence classifier (default: rule-based)");
  app.add_option("--patterns", patterns, "Definition pattern file");
  app.add_option("--negative-lexicon", neg, "Negative opinion words");
  app.add_option("--positive-lexicon", pos, "Positive opinion words");
  app.add_option("--abbreviations", abbr, "Abbreviation list for sentence splitting");
  app.add_option("--created-at", o.created_at, "Manifest timestamp (UTC seconds) for reproducible exports");

  auto* ingest = app.add_subcommand("ingest", "Check a corpus file and report parse errors");
  auto* train_tagger = app.add_subcommand("train-tagger", "Train the token tagger on labelled sentences");
  train_tagger->add_option("--data", o.data, "JSONL labelled sentences")->required();
  train_tagger->add_option("--augment", o.augment, "Augmentations: lowercase, entity_replace")
      ->delimiter(',')
      ->check(CLI::IsMember({"lowercase", "entity_replace"}));
  train_tagger->add_option("--entity-bank", o.entity_bank, "JSON type -> surfaces for entity_replace");
  train_tagger->add_option("--epochs", o.epochs, "Training epochs");
  train_tagger->add_option("--gamma", o.gamma, "Focal loss gamma")->capture_default_str();
  train_tagger->add_option("--hash-bits", o.hash_bits, "log2 of the feature hash size")
      ->capture_default_str()
      ->check(CLI::Range(8, 26));
  auto* train_ranker = app.add_subcommand("train-ranker", "Train the topic ranker from labelled candidates");
  train_ranker->add_option("--labels", o.labels, "CSV key,label")->required();
  train_ranker->add_option("--trees", o.trees, "Boosting rounds")->capture_default_str();
  train_ranker->add_option("--depth", o.depth, "Tree depth")->capture_default_str();
  train_ranker->add_option("--min-leaf", o.min_leaf, "Minimum rows per leaf")->capture_default_str();
  train_ranker->add_option("--learning-rate", o.learning_rate, "Shrinkage")->capture_default_str();
  auto* train_def = app.add_subcommand("train-defclassifier", "Train the definition sentence classifier");
  train_def->add_option("--data", o.data, "CSV category,text")->required();
  train_def->add_option("--epochs", o.epochs, "Training epochs");
  auto* mine = app.add_subcommand("mine", "Full run: corpus to exported knowledge base");
  auto* update = app.add_subcommand("update", "Apply a JSONL stream of upsert/delete events to a saved state");
  update->add_option("--events", o.events, "JSONL events")->required();
  auto* refresh = app.add_subcommand("refresh", "Re-rank topics from the current counters of a saved state");
  auto* exp = app.add_subcommand("export", "Build and export the knowledge base from a saved state");
  auto* eval = app.add_subcommand("eval", "Print decoder, ranker and definition evaluation results");
  eval->add_option("--labels", o.labels, "CSV key,label for ranker AUC (needs --state)");
  eval->add_option("--def-data", o.def_data, "CSV category,text for definition F1");
  eval->add_option("--viterbi-trials", o.viterbi_trials, "Random matrices checked against brute force")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  c.corpus = corpus;
  c.out_dir = out;
  c.tagger_model = tagger;
  c.score_file = scores;
  c.ranker_model = ranker;
  c.classifier_model = classifier;
  c.patterns_file = patterns;
  c.negative_lexicon = neg;
  c.positive_lexicon = pos;
  c.abbreviations_file = abbr;

  try {
    if (*ingest) return cmd_ingest(o);
    if (*train_tagger) return cmd_train_tagger(o);
    if (*train_ranker) return cmd_train_ranker(o);
    if (*train_def) return cmd_train_defclassifier(o);
    if (*mine) return cmd_mine(o);
    if (*update) return cmd_update(o);
    if (*refresh) return cmd_refresh(o);
    if (*exp) return cmd_export(o);
    if (*eval) return cmd_eval(o);
  } catch (const pipeline::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ContractError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const pipeline::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStageError;
  }
  return 0;
}
