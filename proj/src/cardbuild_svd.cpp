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
#include <limits>
#include <string>

#include "topicmine/cardbuild.hpp"
#include "topicmine/common.hpp"

namespace topicmine::cardbuild {

namespace {

constexpr std::uint64_t kDouble = sizeof(double);

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Gaussian test-matrix row for document column j.
void fill_test_row(std::uint64_t seed, std::size_t j, double* out, std::size_t l) {
  Rng rng(splitmix64(seed) ^ splitmix64(static_cast<std::uint64_t>(j) + 0x51ed270b27f1a3c5ull));
  for (std::size_t c = 0; c < l; ++c) out[c] = rng.gaussian();
}

// Q^T M[:, j] into out.
void project_column(const SparseTopicDocMatrix& m, const RowMatrix& q, std::size_t j, double* out) {
  const auto l = static_cast<std::size_t>(q.cols());
  std::fill(out, out + l, 0.0);
  const auto rows = m.column_rows(j);
  const auto vals = m.column_values(j);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double* qr = q.data() + static_cast<std::size_t>(rows[k]) * l;
    for (std::size_t c = 0; c < l; ++c) out[c] += vals[k] * qr[c];
  }
}

// Y[rows of column j] += M[:, j] x^T.
void scatter_column(const SparseTopicDocMatrix& m, std::size_t j, const double* x, RowMatrix& y) {
  const auto l = static_cast<std::size_t>(y.cols());
  const auto rows = m.column_rows(j);
  const auto vals = m.column_values(j);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    double* yr = y.data() + static_cast<std::size_t>(rows[k]) * l;
    for (std::size_t c = 0; c < l; ++c) yr[c] += vals[k] * x[c];
  }
}

// Folds row x into upper-triangular R so that R^T R gains x x^T.
void givens_update(Eigen::MatrixXd& r, double* x) {
  const Eigen::Index l = r.rows();
  for (Eigen::Index k = 0; k < l; ++k) {
    if (x[k] == 0.0) continue;
    const double h = std::hypot(r(k, k), x[k]);
    const double c = r(k, k) / h;
    const double s = x[k] / h;
    for (Eigen::Index jj = k; jj < l; ++jj) {
      const double a = r(k, jj);
      const double b = x[jj];
      r(k, jj) = c * a + s * b;
      x[jj] = -s * a + c * b;
    }
    x[k] = 0.0;
  }
}

RowMatrix orthonormalize(const RowMatrix& y, MemoryLedger& ledger) {
  const auto m = static_cast<std::uint64_t>(y.rows());
  const auto l = static_cast<std::uint64_t>(y.cols());
  const std::uint64_t qr_bytes = (m * l + l) * kDouble;
  const std::uint64_t q_bytes = m * l * kDouble;
  ledger.acquire(qr_bytes);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  ledger.acquire(q_bytes);
  RowMatrix q = qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
  ledger.release(qr_bytes);
  return q;
}

struct Plan {
  std::size_t m, n, l, r;
};

std::uint64_t plan_peak(const Plan& p, std::size_t batch) {
  const std::uint64_t ml = p.m * p.l, bl = batch * p.l, ll = p.l * p.l;
  const std::uint64_t range = ml + bl;                 // Y + test batch
  const std::uint64_t orth = 3 * ml + p.l;             // Y + QR + Q
  const std::uint64_t power = 2 * ml + bl;             // Q + Y + Z batch
  const std::uint64_t fold = ml + bl + ll;             // Q + B batch + R
  const std::uint64_t small_svd = ml + 3 * ll + p.l;   // Q + R + U, V, sigma
  const std::uint64_t finish = ml + ll + p.l + p.r * p.l + p.m * p.r + p.n * p.r + bl;
  return kDouble * std::max({range, orth, power, fold, small_svd, finish});
}

}  // namespace

void MemoryLedger::acquire(std::uint64_t bytes) {
  if (current_ + bytes > budget_) {
    throw std::logic_error("memory ledger over budget: " + std::to_string(current_ + bytes) + " > " +
                           std::to_string(budget_));
  }
  current_ += bytes;
  peak_ = std::max(peak_, current_);
}

void MemoryLedger::release(std::uint64_t bytes) {
  if (bytes > current_) throw std::logic_error("memory ledger released more than acquired");
  current_ -= bytes;
}

BudgetError::BudgetError(std::uint64_t minimum, std::uint64_t budget)
    : std::runtime_error("memory budget of " + std::to_string(budget) + " bytes is too small; the factorization needs at least " +
                         std::to_string(minimum) + " bytes"),
      minimum_(minimum) {}

std::uint64_t svd_working_bytes(std::size_t n_topics, std::size_t n_docs, const SvdConfig& config,
                                std::size_t batch_size) {
  const std::size_t l = config.rank + config.oversample;
  return plan_peak({n_topics, n_docs, l, config.rank}, std::max<std::size_t>(1, std::min(batch_size, n_docs)));
}

SvdResult batched_randomized_svd(const SparseTopicDocMatrix& m, const SvdConfig& config) {
  const std::size_t n_topics = m.n_topics(), n_docs = m.n_docs();
  const std::size_t r = config.rank;
  const std::size_t l = config.rank + config.oversample;
  if (r < 1 || config.batch_size < 1) throw ContractError("svd needs rank >= 1 and batch size >= 1");
  if (l > std::min(n_topics, n_docs)) {
    throw ContractError("rank + oversampling (" + std::to_string(l) + ") exceeds min(topics, docs) = " +
                        std::to_string(std::min(n_topics, n_docs)));
  }

  const Plan plan{n_topics, n_docs, l, r};
  const std::uint64_t minimum = plan_peak(plan, 1);
  if (minimum > config.memory_budget) throw BudgetError(minimum, config.memory_budget);
  std::size_t batch = std::min(config.batch_size, n_docs);
  while (batch > 1 && plan_peak(plan, batch) > config.memory_budget) {
    const std::uint64_t spare = config.memory_budget - plan_peak(plan, 1);
    batch = std::min<std::size_t>(batch - 1, 1 + static_cast<std::size_t>(spare / (kDouble * l)));
  }

  MemoryLedger ledger(config.memory_budget);
  const auto rows = static_cast<Eigen::Index>(n_topics);
  const auto cols = static_cast<Eigen::Index>(l);
  const std::uint64_t ml_bytes = static_cast<std::uint64_t>(n_topics) * l * kDouble;
  const std::uint64_t batch_bytes = static_cast<std::uint64_t>(batch) * l * kDouble;
  std::size_t passes = 0;

  // Range finding: Y = M Omega.
  ledger.acquire(ml_bytes);
  RowMatrix y = RowMatrix::Zero(rows, cols);
  {
    ledger.acquire(batch_bytes);
    RowMatrix omega(static_cast<Eigen::Index>(batch), cols);
    for (std::size_t start = 0; start < n_docs; start += batch) {
      const std::size_t stop = std::min(n_docs, start + batch);
      for (std::size_t j = start; j < stop; ++j) fill_test_row(config.seed, j, omega.row(static_cast<Eigen::Index>(j - start)).data(), l);
      for (std::size_t j = start; j < stop; ++j) scatter_column(m, j, omega.row(static_cast<Eigen::Index>(j - start)).data(), y);
    }
    ledger.release(batch_bytes);
    ++passes;
  }
  RowMatrix q = orthonormalize(y, ledger);
  y.resize(0, 0);
  ledger.release(ml_bytes);

  // Power refinements: Y = M M^T Q.
  for (std::size_t it = 0; it < config.power_iterations; ++it) {
    ledger.acquire(ml_bytes);
    y = RowMatrix::Zero(rows, cols);
    ledger.acquire(batch_bytes);
    RowMatrix z(static_cast<Eigen::Index>(batch), cols);
    for (std::size_t start = 0; start < n_docs; start += batch) {
      const std::size_t stop = std::min(n_docs, start + batch);
      for (std::size_t j = start; j < stop; ++j) project_column(m, q, j, z.row(static_cast<Eigen::Index>(j - start)).data());
      for (std::size_t j = start; j < stop; ++j) scatter_column(m, j, z.row(static_cast<Eigen::Index>(j - start)).data(), y);
    }
    ledger.release(batch_bytes);
    ++passes;
    q.resize(0, 0);
    ledger.release(ml_bytes);
    q = orthonormalize(y, ledger);
    y.resize(0, 0);
    ledger.release(ml_bytes);
  }

  // Fold B = Q^T M into R with R^T R = B B^T.
  const std::uint64_t ll_bytes = static_cast<std::uint64_t>(l) * l * kDouble;
  ledger.acquire(ll_bytes);
  Eigen::MatrixXd rfac = Eigen::MatrixXd::Zero(cols, cols);
  {
    ledger.acquire(batch_bytes);
    RowMatrix b(static_cast<Eigen::Index>(batch), cols);
    for (std::size_t start = 0; start < n_docs; start += batch) {
      const std::size_t stop = std::min(n_docs, start + batch);
      for (std::size_t j = start; j < stop; ++j) project_column(m, q, j, b.row(static_cast<Eigen::Index>(j - start)).data());
      for (std::size_t j = start; j < stop; ++j) givens_update(rfac, b.row(static_cast<Eigen::Index>(j - start)).data());
    }
    ledger.release(batch_bytes);
    ++passes;
  }

  // B = R^T Q_t^T, so B's left factor and spectrum are those of R^T.
  const std::uint64_t svd_bytes = (2 * static_cast<std::uint64_t>(l) * l + l) * kDouble;
  ledger.acquire(svd_bytes);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rfac.transpose(), Eigen::ComputeFullU);
  Eigen::MatrixXd ur = svd.matrixU();
  const Eigen::VectorXd sigma_all = svd.singularValues();
  ledger.release(ll_bytes);  // R
  ledger.release(static_cast<std::uint64_t>(l) * l * kDouble);  // V (not kept)

  SvdResult out;
  const auto rr = static_cast<Eigen::Index>(r);
  const std::uint64_t topic_bytes = static_cast<std::uint64_t>(n_topics) * r * kDouble;
  ledger.acquire(topic_bytes);
  Eigen::MatrixXd u = q * ur.leftCols(rr);
  for (Eigen::Index c = 0; c < rr; ++c) {
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < u.rows(); ++i) {
      if (std::abs(u(i, c)) > std::abs(u(arg, c))) arg = i;
    }
    if (u(arg, c) < 0) {
      u.col(c) *= -1.0;
      ur.col(c) *= -1.0;
    }
  }
  out.singular_values = sigma_all.head(rr);
  const double cutoff = sigma_all.size() > 0 ? sigma_all(0) * std::numeric_limits<double>::epsilon() *
                                                   static_cast<double>(std::max(n_topics, n_docs))
                                             : 0.0;
  Eigen::VectorXd root(rr), inv_root(rr);
  for (Eigen::Index c = 0; c < rr; ++c) {
    const double s = out.singular_values(c);
    root(c) = std::sqrt(s);
    inv_root(c) = s > cutoff ? 1.0 / std::sqrt(s) : 0.0;
  }
  out.topic_vectors = u * root.asDiagonal();

  // Doc vectors: V_j sqrt(sigma) = sigma^{-1/2} U_r^T (Q^T M[:, j]).
  const std::uint64_t doc_bytes = static_cast<std::uint64_t>(n_docs) * r * kDouble;
  ledger.acquire(doc_bytes);
  out.doc_vectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_docs), rr);
  {
    ledger.acquire(batch_bytes + static_cast<std::uint64_t>(r) * l * kDouble);
    RowMatrix b(static_cast<Eigen::Index>(batch), cols);
    const Eigen::MatrixXd proj = ur.leftCols(rr).transpose();
    for (std::size_t start = 0; start < n_docs; start += batch) {
      const std::size_t stop = std::min(n_docs, start + batch);
      for (std::size_t j = start; j < stop; ++j) project_column(m, q, j, b.row(static_cast<Eigen::Index>(j - start)).data());
      for (std::size_t j = start; j < stop; ++j) {
        const Eigen::VectorXd bj = b.row(static_cast<Eigen::Index>(j - start)).transpose();
        out.doc_vectors.row(static_cast<Eigen::Index>(j)) = (proj * bj).cwiseProduct(inv_root).transpose();
      }
    }
    ledger.release(batch_bytes + static_cast<std::uint64_t>(r) * l * kDouble);
    ++passes;
  }
  ledger.release(ll_bytes + static_cast<std::uint64_t>(l) * kDouble);  // U_r, sigma
  ledger.release(ml_bytes);  // Q

  out.batch_size = batch;
  out.peak_bytes = ledger.peak();
  out.passes = passes;
  return out;
}

}  // namespace topicmine::cardbuild
