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
#include <fstream>
#include <limits>

#include <json.hpp>

#include "topicmine/cardbuild.hpp"
#include "topicmine/common.hpp"

namespace topicmine::cardbuild {

using nlohmann::json;

namespace {

std::optional<std::size_t> find_row(const std::vector<std::string>& ids, std::string_view id) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return i;
  }
  return std::nullopt;
}

const char* const kKindStems[] = {"topics", "docs", "users"};

void write_block(const std::filesystem::path& path, const Eigen::MatrixXd& m, std::uint32_t kind) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  binio::write_u64(out, static_cast<std::uint64_t>(m.rows()));
  binio::write_u64(out, static_cast<std::uint64_t>(m.cols()));
  binio::write_u32(out, kind);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) binio::write_f64(out, m(i, c));
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Eigen::MatrixXd read_block(const std::filesystem::path& path, std::uint32_t kind, std::size_t rows, std::size_t dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const auto n = binio::read_u64(in);
  const auto d = binio::read_u64(in);
  const auto k = binio::read_u32(in);
  if (n != rows || d != dim || k != kind) throw std::runtime_error(path.string() + ": header does not match the index");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = binio::read_f64(in);
  }
  return m;
}

}  // namespace

std::optional<std::size_t> EmbeddingSpace::topic_row(std::string_view id) const { return find_row(topic_ids, id); }
std::optional<std::size_t> EmbeddingSpace::doc_row(std::string_view id) const { return find_row(doc_ids, id); }
std::optional<std::size_t> EmbeddingSpace::user_row(std::string_view id) const { return find_row(user_ids, id); }

EmbeddingSpace make_space(const SparseTopicDocMatrix& m, const SvdResult& svd) {
  if (static_cast<std::size_t>(svd.topic_vectors.rows()) != m.n_topics() ||
      static_cast<std::size_t>(svd.doc_vectors.rows()) != m.n_docs()) {
    throw ContractError("factor shapes do not match the matrix");
  }
  EmbeddingSpace s;
  s.dimension = static_cast<std::size_t>(svd.topic_vectors.cols());
  s.topic_ids = m.topic_keys();
  s.doc_ids = m.doc_ids();
  s.topic_vectors = svd.topic_vectors;
  s.doc_vectors = svd.doc_vectors;
  s.user_vectors = Eigen::MatrixXd(0, svd.topic_vectors.cols());
  s.singular_values = svd.singular_values;
  return s;
}

std::optional<Eigen::VectorXd> user_embedding(std::span<const std::size_t> doc_rows, const Eigen::MatrixXd& doc_vectors) {
  if (doc_rows.empty()) return std::nullopt;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(doc_vectors.cols());
  for (std::size_t row : doc_rows) {
    if (row >= static_cast<std::size_t>(doc_vectors.rows())) throw ContractError("doc row out of range");
    sum += doc_vectors.row(static_cast<Eigen::Index>(row)).transpose();
  }
  return sum / static_cast<double>(doc_rows.size());
}

void add_users(EmbeddingSpace& space, const std::map<std::string, std::vector<std::string>>& authored_docs) {
  std::map<std::string, std::size_t> doc_pos;
  for (std::size_t j = 0; j < space.doc_ids.size(); ++j) doc_pos.emplace(space.doc_ids[j], j);
  std::vector<std::string> ids;
  std::vector<Eigen::VectorXd> rows;
  for (const auto& [user, docs] : authored_docs) {
    if (user.empty()) continue;
    std::vector<std::size_t> idx;
    for (const auto& d : docs) {
      if (const auto it = doc_pos.find(d); it != doc_pos.end()) idx.push_back(it->second);
    }
    if (auto v = user_embedding(idx, space.doc_vectors)) {
      ids.push_back(user);
      rows.push_back(std::move(*v));
    }
  }
  space.user_ids = std::move(ids);
  space.user_vectors.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(space.dimension));
  for (std::size_t i = 0; i < rows.size(); ++i) space.user_vectors.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
}

double relatedness(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) {
    throw ContractError("relatedness: dimension mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  return a.dot(b);
}

std::vector<Related> top_k_related(const EmbeddingSpace& space, std::string_view topic, EntityKind kind,
                                   std::size_t k) {
  const auto row = space.topic_row(topic);
  if (!row || k == 0) return {};
  const Eigen::VectorXd q = space.topic_vectors.row(static_cast<Eigen::Index>(*row)).transpose();
  const auto& ids = kind == EntityKind::topic ? space.topic_ids : kind == EntityKind::doc ? space.doc_ids : space.user_ids;
  const auto& vecs =
      kind == EntityKind::topic ? space.topic_vectors : kind == EntityKind::doc ? space.doc_vectors : space.user_vectors;
  std::vector<Related> all;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (kind == EntityKind::topic && i == *row) continue;
    all.push_back({ids[i], relatedness(q, vecs.row(static_cast<Eigen::Index>(i)).transpose())});
  }
  const auto by_score = [](const Related& a, const Related& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  };
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), by_score);
  all.resize(keep);
  return all;
}

std::vector<Related> rerank_related_docs(std::span<const Related> candidates, std::span<const RerankSignals> signals,
                                         const RerankWeights& weights) {
  if (candidates.size() != signals.size()) throw ContractError("one signal record per candidate required");
  if (candidates.empty()) return {};
  double max_bm25 = 0.0;
  std::int64_t t_min = std::numeric_limits<std::int64_t>::max(), t_max = std::numeric_limits<std::int64_t>::min();
  for (const auto& s : signals) {
    max_bm25 = std::max(max_bm25, s.bm25);
    t_min = std::min(t_min, s.timestamp);
    t_max = std::max(t_max, s.timestamp);
  }
  std::vector<Related> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& s = signals[i];
    const double bm25 = max_bm25 > 0.0 ? s.bm25 / max_bm25 : 0.0;
    const double recency =
        t_max > t_min ? static_cast<double>(s.timestamp - t_min) / static_cast<double>(t_max - t_min) : 0.0;
    out.push_back({candidates[i].id, weights.bm25 * bm25 + weights.title * (s.in_title ? 1.0 : 0.0) +
                                         weights.recency * recency});
  }
  std::stable_sort(out.begin(), out.end(), [](const Related& a, const Related& b) { return a.score > b.score; });
  return out;
}

void write_embeddings(const EmbeddingSpace& space, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Eigen::MatrixXd* blocks[] = {&space.topic_vectors, &space.doc_vectors, &space.user_vectors};
  for (std::uint32_t k = 0; k < 3; ++k) {
    write_block(dir / (std::string(kKindStems[k]) + ".bin"), *blocks[k], k);
  }
  json index = {{"dimension", space.dimension},
                {"singular_values", std::vector<double>(space.singular_values.data(),
                                                        space.singular_values.data() + space.singular_values.size())},
                {"topics", space.topic_ids},
                {"docs", space.doc_ids},
                {"users", space.user_ids}};
  std::ofstream out(dir / "embeddings_index.json");
  if (!out) throw std::runtime_error("cannot write embedding index in " + dir.string());
  out << index.dump(2) << '\n';
}

EmbeddingSpace read_embeddings(const std::filesystem::path& dir) {
  std::ifstream in(dir / "embeddings_index.json");
  if (!in) throw std::runtime_error("cannot open embedding index in " + dir.string());
  const json index = json::parse(in);
  EmbeddingSpace s;
  s.dimension = index.at("dimension").get<std::size_t>();
  const auto sv = index.at("singular_values").get<std::vector<double>>();
  s.singular_values = Eigen::Map<const Eigen::VectorXd>(sv.data(), static_cast<Eigen::Index>(sv.size()));
  s.topic_ids = index.at("topics").get<std::vector<std::string>>();
  s.doc_ids = index.at("docs").get<std::vector<std::string>>();
  s.user_ids = index.at("users").get<std::vector<std::string>>();
  s.topic_vectors = read_block(dir / "topics.bin", 0, s.topic_ids.size(), s.dimension);
  s.doc_vectors = read_block(dir / "docs.bin", 1, s.doc_ids.size(), s.dimension);
  s.user_vectors = read_block(dir / "users.bin", 2, s.user_ids.size(), s.dimension);
  return s;
}

}  // namespace topicmine::cardbuild
