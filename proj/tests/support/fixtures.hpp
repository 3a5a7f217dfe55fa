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

#pragma once

#include <string>
#include <vector>

#include "topicmine/nertag.hpp"

namespace topicmine::testing {

/// Lexicon-separable tagging data: templated sentences whose entity slots are
/// filled from fixed per-type name lists.
std::vector<nertag::LabeledSentence> separable_tagging_data(std::size_t count, std::uint64_t seed,
                                                            const nertag::LabelSet& labels);

/// Long filler sentences where roughly `entity_rate` of tokens belong to a
/// single-token person mention, with lexically ambiguous context.
std::vector<nertag::LabeledSentence> imbalanced_tagging_data(std::size_t count, double entity_rate,
                                                             std::uint64_t seed, const nertag::LabelSet& labels);

/// Greedy-invalid matrix over tokens ("Turin", "##g", "Test"):
/// per-token argmax is B-person, I-creative_work, I-creative_work and the
/// best valid path is B-creative_work, I-creative_work, I-creative_work.
nertag::ScoreMatrix turing_test_scores(const nertag::LabelSet& labels);

}  // namespace topicmine::testing

#include "topicmine/topicrank.hpp"

namespace topicmine::testing {

/// Candidate with the given counters (doc ids synthesized).
topicrank::TopicCandidate make_candidate(const std::string& key, std::int64_t ner, std::int64_t doc,
                                         std::int64_t title);

/// Ranker fixture: label 1 iff ner_per_doc is high (>= 2), label 0 for
/// ner_per_doc <= 1.1. NER frequency is drawn independently of the label.
std::vector<topicrank::LabeledFeatures> ratio_labeled_rows(std::size_t count, std::uint64_t seed);

}  // namespace topicmine::testing

#include "topicmine/defmine.hpp"

namespace topicmine::testing {

/// Templated enterprise sentences cycling through all five definition
/// categories. Includes opinionated "X is a ..." sentences labeled
/// NonDefinition, which a connective-only rule mislabels as Sufficient.
std::vector<defmine::LabeledText> definition_sentences(std::size_t count, std::uint64_t seed);

/// Binary view: 1 for Sufficient, 0 otherwise.
std::vector<std::pair<std::string, int>> sufficient_labels(const std::vector<defmine::LabeledText>& rows);

}  // namespace topicmine::testing
