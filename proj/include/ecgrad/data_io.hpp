// Copyright 2026 The ecgrad Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#ifndef ECGRAD_DATA_IO_HPP
#define ECGRAD_DATA_IO_HPP

#include "ecgrad/core.hpp"
#include "ecgrad/problems.hpp"

#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <utility>
#include <variant>
#include <vector>

namespace ecgrad {

/// One LIBSVM line. Feature indices are 1-based and strictly increasing.
struct LibsvmRecord {
  double label = 0.0;
  std::vector<std::pair<std::int64_t, double>> features;

  bool operator==(const LibsvmRecord&) const = default;
};

struct LibsvmData {
  std::vector<LibsvmRecord> records;
  /// Largest index seen, or the hint when one was given.
  std::int64_t dim = 0;
};

/// Parses `label idx:val idx:val ...` lines. Text after `#` is ignored and
/// blank lines are skipped. Throws ParseError carrying the 1-based line number.
/// With a dimension hint, indices above the hint are errors.
LibsvmData parse_libsvm(std::istream& in, std::optional<std::int64_t> dim_hint = std::nullopt);
LibsvmData read_libsvm_file(const std::string& path,
                            std::optional<std::int64_t> dim_hint = std::nullopt);

/// Writes records with 17 significant digits, so parsing the output gives the
/// same records back.
void serialize_libsvm(std::ostream& out, const std::vector<LibsvmRecord>& records);

/// Divides each feature vector by its Euclidean norm; zero vectors stay as is.
std::vector<LibsvmRecord> normalize_samples(std::vector<LibsvmRecord> records);

enum class ShardPolicy { Contiguous, RoundRobin };

/// Partitions `items` into n parts whose sizes differ by at most one.
/// Contiguous gives the first (size % n) parts one extra item.
template <typename T>
std::vector<std::vector<T>> shard(const std::vector<T>& items, std::size_t n,
                                  ShardPolicy policy = ShardPolicy::Contiguous) {
  if (n < 1) throw ConfigError("shard: need at least one worker");
  std::vector<std::vector<T>> out(n);
  const std::size_t total = items.size();
  if (policy == ShardPolicy::RoundRobin) {
    for (std::size_t j = 0; j < total; ++j) out[j % n].push_back(items[j]);
    return out;
  }
  const std::size_t base = total / n, extra = total % n;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    out[i].assign(items.begin() + static_cast<std::ptrdiff_t>(pos),
                  items.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return out;
}

/// Dense samples: one row per sample.
template <typename Scalar>
struct Dataset {
  Matrix<Scalar> features;
  Vector<Scalar> labels;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

/// Densifies records to `dim` columns (0 means the largest index seen).
template <typename Scalar>
Dataset<Scalar> to_dataset(const std::vector<LibsvmRecord>& records, std::int64_t dim = 0) {
  std::int64_t d = dim;
  for (const auto& r : records)
    for (const auto& [idx, v] : r.features) {
      if (dim > 0 && idx > dim) throw DomainError("to_dataset: feature index exceeds dimension");
      if (dim == 0) d = std::max(d, idx);
    }
  Dataset<Scalar> out;
  out.features = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(records.size()), d);
  out.labels.resize(static_cast<Eigen::Index>(records.size()));
  for (std::size_t j = 0; j < records.size(); ++j) {
    const auto row = static_cast<Eigen::Index>(j);
    out.labels(row) = static_cast<Scalar>(records[j].label);
    for (const auto& [idx, v] : records[j].features)
      out.features(row, static_cast<Eigen::Index>(idx - 1)) = static_cast<Scalar>(v);
  }
  return out;
}

/// Row-wise Euclidean normalization; zero rows stay as is.
template <typename Scalar>
void normalize_rows(Dataset<Scalar>& data) {
  for (Eigen::Index r = 0; r < data.size(); ++r) {
    const Scalar n = data.features.row(r).norm();
    if (n > Scalar(0)) data.features.row(r) /= n;
  }
}

/// Splits samples into per-worker shards, padding nothing (every shard keeps
/// the dataset's dimension). Logistic labels are coerced to +-1.
template <typename Scalar>
std::vector<Shard<Scalar>> make_shards(const Dataset<Scalar>& data, std::size_t n, Loss loss,
                                       ShardPolicy policy = ShardPolicy::Contiguous) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) rows[j] = static_cast<Eigen::Index>(j);
  const auto parts = shard(rows, n, policy);
  std::vector<Shard<Scalar>> out;
  out.reserve(n);
  for (const auto& part : parts) {
    Shard<Scalar> s;
    s.features = data.features(part, Eigen::all);
    s.labels = data.labels(part);
    if (loss == Loss::Logistic)
      s.labels = s.labels.unaryExpr([](Scalar y) { return y > Scalar(0) ? Scalar(1) : Scalar(-1); });
    out.push_back(std::move(s));
  }
  return out;
}

// -----------------------------------------------------------------------------
// Synthetic data.
// -----------------------------------------------------------------------------

struct QuadraticKappa {
  Eigen::Index d = 2;
  double kappa = 1.0;
  std::uint64_t seed = 0;
};

struct LeastSquaresSynth {
  Eigen::Index n_samples = 4000;
  Eigen::Index d = 400;
  double noise = 0.1;
  std::uint64_t seed = 0;
};

using SyntheticSpec = std::variant<QuadraticKappa, LeastSquaresSynth>;

template <typename Scalar>
Matrix<Scalar> standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix<Scalar> m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<Scalar>(normal(rng));
  return m;
}

/// Haar-distributed orthogonal matrix from the QR factorization of a Gaussian matrix.
template <typename Scalar>
Matrix<Scalar> random_orthogonal(Eigen::Index d, std::mt19937_64& rng) {
  const Matrix<Scalar> g = standard_normal_matrix<Scalar>(d, d, rng);
  Eigen::HouseholderQR<Matrix<Scalar>> qr(g);
  Matrix<Scalar> q = qr.householderQ();
  const Matrix<Scalar>& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < d; ++j)
    if (r(j, j) < Scalar(0)) q.col(j) *= Scalar(-1);
  return q;
}

template <typename Scalar>
struct QuadraticInputs {
  Matrix<Scalar> H;
  Vector<Scalar> b;
};

/// H = Q diag(lambda) Q^T with lambda log-spaced over [1, kappa]; b standard normal.
/// A single dimension gets the eigenvalue 1.
template <typename Scalar>
QuadraticInputs<Scalar> synth_quadratic(const QuadraticKappa& spec) {
  if (spec.d < 1) throw ConfigError("synth: d must be at least 1");
  if (!(spec.kappa >= 1.0)) throw ConfigError("synth: kappa must be at least 1");
  std::mt19937_64 rng(spec.seed);
  const Matrix<Scalar> q = random_orthogonal<Scalar>(spec.d, rng);
  Vector<Scalar> lambda(spec.d);
  for (Eigen::Index j = 0; j < spec.d; ++j) {
    const double t = spec.d == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(spec.d - 1);
    lambda(j) = static_cast<Scalar>(std::pow(spec.kappa, t));
  }
  QuadraticInputs<Scalar> out;
  out.H = q * lambda.asDiagonal() * q.transpose();
  out.H = Scalar(0.5) * (out.H + out.H.transpose()).eval();
  out.b = standard_normal_matrix<Scalar>(spec.d, 1, rng);
  return out;
}

/// Gaussian features, y = <z, x_true> + noise * N(0, 1), x_true standard normal.
template <typename Scalar>
Dataset<Scalar> synth_least_squares(const LeastSquaresSynth& spec) {
  if (spec.d < 1 || spec.n_samples < 1) throw ConfigError("synth: sizes must be positive");
  std::mt19937_64 rng(spec.seed);
  Dataset<Scalar> out;
  out.features = standard_normal_matrix<Scalar>(spec.n_samples, spec.d, rng);
  const Vector<Scalar> x_true = standard_normal_matrix<Scalar>(spec.d, 1, rng);
  const Vector<Scalar> noise = standard_normal_matrix<Scalar>(spec.n_samples, 1, rng);
  out.labels = out.features * x_true + static_cast<Scalar>(spec.noise) * noise;
  return out;
}

}  // namespace ecgrad

#endif  // ECGRAD_DATA_IO_HPP
