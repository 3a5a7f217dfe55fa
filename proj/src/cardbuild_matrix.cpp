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
#include <string>

#include "topicmine/cardbuild.hpp"
#include "topicmine/common.hpp"

namespace topicmine::cardbuild {

double bm25_weight(std::int64_t tf, std::int64_t dl, double avgdl, std::int64_t df, std::int64_t n_docs,
                   const Bm25Params& params) {
  if (tf < 1 || df < 1 || n_docs < df || dl < 1 || !(avgdl > 0.0)) {
    throw ContractError("bm25_weight: need tf>=1, df>=1, n_docs>=df, dl>=1, avgdl>0");
  }
  if (!(params.k1 > 0.0) || params.b < 0.0 || params.b > 1.0) throw ContractError("bm25_weight: bad k1/b");
  const double idf = std::log(1.0 + (static_cast<double>(n_docs - df) + 0.5) / (static_cast<double>(df) + 0.5));
  const double t = static_cast<double>(tf);
  const double norm = params.k1 * (1.0 - params.b + params.b * static_cast<double>(dl) / avgdl);
  return idf * t * (params.k1 + 1.0) / (t + norm);
}

SparseTopicDocMatrix::SparseTopicDocMatrix(std::vector<std::string> topic_keys, std::vector<std::string> doc_ids)
    : topic_keys_(std::move(topic_keys)), doc_ids_(std::move(doc_ids)) {
  for (std::size_t i = 0; i < topic_keys_.size(); ++i) {
    if (!topic_pos_.emplace(topic_keys_[i], i).second) throw ContractError("duplicate topic key " + topic_keys_[i]);
  }
  for (std::size_t j = 0; j < doc_ids_.size(); ++j) {
    if (!doc_pos_.emplace(doc_ids_[j], j).second) throw ContractError("duplicate doc id " + doc_ids_[j]);
  }
  col_ptr_.reserve(doc_ids_.size() + 1);
}

std::optional<std::size_t> SparseTopicDocMatrix::topic_index(std::string_view key) const {
  const auto it = topic_pos_.find(key);
  if (it == topic_pos_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> SparseTopicDocMatrix::doc_index(std::string_view doc_id) const {
  const auto it = doc_pos_.find(doc_id);
  if (it == doc_pos_.end()) return std::nullopt;
  return it->second;
}

void SparseTopicDocMatrix::append_column(std::span<const std::pair<std::size_t, double>> entries) {
  if (col_ptr_.size() > doc_ids_.size()) throw ContractError("all columns already appended");
  std::size_t prev = 0;
  bool first = true;
  for (const auto& [i, v] : entries) {
    if (i >= topic_keys_.size()) throw ContractError("row index out of range");
    if (!first && i <= prev) throw ContractError("rows within a column must increase");
    if (!std::isfinite(v) || !(v > 0.0)) throw ContractError("matrix weights must be finite and positive");
    rows_.push_back(static_cast<std::uint32_t>(i));
    values_.push_back(v);
    prev = i;
    first = false;
  }
  col_ptr_.push_back(rows_.size());
}

std::span<const std::uint32_t> SparseTopicDocMatrix::column_rows(std::size_t j) const {
  if (j + 1 >= col_ptr_.size()) throw ContractError("column index out of range");
  return std::span<const std::uint32_t>(rows_).subspan(col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]);
}

std::span<const double> SparseTopicDocMatrix::column_values(std::size_t j) const {
  if (j + 1 >= col_ptr_.size()) throw ContractError("column index out of range");
  return std::span<const double>(values_).subspan(col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]);
}

double SparseTopicDocMatrix::at(std::size_t i, std::size_t j) const {
  const auto rows = column_rows(j);
  const auto it = std::lower_bound(rows.begin(), rows.end(), static_cast<std::uint32_t>(i));
  if (it == rows.end() || *it != i) return 0.0;
  return column_values(j)[static_cast<std::size_t>(it - rows.begin())];
}

Eigen::MatrixXd SparseTopicDocMatrix::to_dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_topics()), static_cast<Eigen::Index>(n_docs()));
  for (std::size_t j = 0; j + 1 < col_ptr_.size(); ++j) {
    const auto rows = column_rows(j);
    const auto vals = column_values(j);
    for (std::size_t k = 0; k < rows.size(); ++k) out(rows[k], static_cast<Eigen::Index>(j)) = vals[k];
  }
  return out;
}

SparseTopicDocMatrix SparseTopicDocMatrix::from_dense(const Eigen::MatrixXd& m) {
  std::vector<std::string> topics, docs;
  for (Eigen::Index i = 0; i < m.rows(); ++i) topics.push_back("t" + std::to_string(i));
  for (Eigen::Index j = 0; j < m.cols(); ++j) docs.push_back("d" + std::to_string(j));
  SparseTopicDocMatrix out(std::move(topics), std::move(docs));
  std::vector<std::pair<std::size_t, double>> col;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    col.clear();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) != 0.0) col.emplace_back(static_cast<std::size_t>(i), m(i, j));
    }
    out.append_column(col);
  }
  return out;
}

SparseTopicDocMatrix build_matrix(std::span<const std::string> topic_keys, std::span<const DocStats> docs,
                                  const Bm25Params& params, std::vector<std::string>* warnings) {
  std::map<std::string, std::int64_t> df;
  double total_length = 0.0;
  std::int64_t counted = 0;
  for (const auto& d : docs) {
    if (d.length > 0) {
      total_length += static_cast<double>(d.length);
      ++counted;
    }
    for (const auto& [key, tf] : d.term_counts) {
      if (tf > 0) ++df[key];
    }
  }

  std::vector<std::string> kept;
  for (const auto& key : topic_keys) {
    if (df.contains(key)) {
      kept.push_back(key);
    } else if (warnings) {
      warnings->push_back("topic '" + key + "' does not occur in the corpus; left out of the matrix");
    }
  }
  std::vector<std::string> doc_ids;
  for (const auto& d : docs) doc_ids.push_back(d.doc_id);
  SparseTopicDocMatrix out(kept, std::move(doc_ids));

  const double avgdl = counted > 0 ? total_length / static_cast<double>(counted) : 1.0;
  const auto n_docs = static_cast<std::int64_t>(docs.size());
  std::vector<std::pair<std::size_t, double>> col;
  for (const auto& d : docs) {
    col.clear();
    for (const auto& [key, tf] : d.term_counts) {
      if (tf <= 0) continue;
      const auto i = out.topic_index(key);
      if (!i) continue;
      if (tf > d.length) throw ContractError("doc " + d.doc_id + ": term count exceeds document length");
      col.emplace_back(*i, bm25_weight(tf, d.length, avgdl, df.at(key), n_docs, params));
    }
    std::sort(col.begin(), col.end());
    out.append_column(col);
  }
  return out;
}

}  // namespace topicmine::cardbuild
