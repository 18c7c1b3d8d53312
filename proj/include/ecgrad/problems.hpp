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

#ifndef ECGRAD_PROBLEMS_HPP
#define ECGRAD_PROBLEMS_HPP

#include "ecgrad/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <variant>
#include <vector>

namespace ecgrad {

// -----------------------------------------------------------------------------
// Quadratic objective f(x) = 1/2 x'Hx + b'x, shared by every worker.
// -----------------------------------------------------------------------------

template <typename Scalar>
class QuadraticProblem {
 public:
  QuadraticProblem(Matrix<Scalar> H, Vector<Scalar> b, std::size_t workers = 1)
      : H_(std::move(H)), b_(std::move(b)), workers_(workers) {
    if (H_.rows() != H_.cols()) throw DomainError("quadratic: H must be square");
    require_dim(b_.size(), H_.rows(), "quadratic: b");
    if (workers_ < 1) throw ConfigError("quadratic: need at least one worker");
    if (!H_.allFinite() || !b_.allFinite()) throw DomainError("quadratic: non-finite data");
    const Scalar scale = std::max(H_.cwiseAbs().maxCoeff(), Scalar(1));
    if ((H_ - H_.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10) * scale)
      throw DomainError("quadratic: H is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(H_, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw DomainError("quadratic: eigen-solver failed");
    mu_ = es.eigenvalues().minCoeff();
    L_ = es.eigenvalues().maxCoeff();
    if (!(mu_ > Scalar(0))) throw DomainError("quadratic: H must be positive definite");
    Eigen::LDLT<Matrix<Scalar>> ldlt(H_);
    x_star_ = -ldlt.solve(b_);
    f_star_ = value(x_star_);
  }

  Eigen::Index dim() const { return H_.rows(); }
  std::size_t workers() const { return workers_; }
  const Matrix<Scalar>& H() const { return H_; }
  const Vector<Scalar>& b() const { return b_; }
  Scalar mu() const { return mu_; }
  Scalar L() const { return L_; }
  Scalar kappa() const { return L_ / mu_; }
  const Vector<Scalar>& x_star() const { return x_star_; }
  Scalar f_star() const { return f_star_; }

  Scalar value(const Vector<Scalar>& x) const {
    require_dim(x.size(), dim(), "quadratic value");
    return Scalar(0.5) * x.dot(H_ * x) + b_.dot(x);
  }
  Vector<Scalar> grad(const Vector<Scalar>& x) const {
    require_dim(x.size(), dim(), "quadratic grad");
    return H_ * x + b_;
  }

 private:
  Matrix<Scalar> H_;
  Vector<Scalar> b_;
  std::size_t workers_;
  Scalar mu_{0}, L_{0};
  Vector<Scalar> x_star_;
  Scalar f_star_{0};
};

// -----------------------------------------------------------------------------
// Empirical risk f_i(x) = (1/m) sum_j loss(<z_j, x>; y_j) + lambda/2 ||x||^2.
// -----------------------------------------------------------------------------

enum class Loss { LeastSquares, Logistic, Robust };

/// One worker's data: samples are rows of `features`.
template <typename Scalar>
struct Shard {
  Matrix<Scalar> features;
  Vector<Scalar> labels;

  Eigen::Index size() const { return features.rows(); }
};

namespace loss {

// Derivatives are taken with respect to the linear prediction t = <z, x>.

template <typename Scalar>
Scalar value(Loss kind, Scalar t, Scalar y) {
  switch (kind) {
    case Loss::LeastSquares: {
      const Scalar r = t - y;
      return Scalar(0.5) * r * r;
    }
    case Loss::Logistic: {
      const Scalar m = -y * t;
      return m > Scalar(0) ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
    }
    case Loss::Robust: {
      const Scalar r2 = (t - y) * (t - y);
      return r2 / (Scalar(1) + r2);
    }
  }
  return Scalar(0);
}

template <typename Scalar>
Scalar first(Loss kind, Scalar t, Scalar y) {
  switch (kind) {
    case Loss::LeastSquares:
      return t - y;
    case Loss::Logistic:
      // -y / (1 + exp(y t))
      return -y / (Scalar(1) + std::exp(y * t));
    case Loss::Robust: {
      const Scalar r = t - y;
      const Scalar s = Scalar(1) + r * r;
      return Scalar(2) * r / (s * s);
    }
  }
  return Scalar(0);
}

template <typename Scalar>
Scalar second(Loss kind, Scalar t, Scalar y) {
  switch (kind) {
    case Loss::LeastSquares:
      return Scalar(1);
    case Loss::Logistic: {
      const Scalar p = Scalar(1) / (Scalar(1) + std::exp(-y * t));
      return p * (Scalar(1) - p);
    }
    case Loss::Robust: {
      const Scalar r2 = (t - y) * (t - y);
      const Scalar s = Scalar(1) + r2;
      return (Scalar(2) - Scalar(6) * r2) / (s * s * s);
    }
  }
  return Scalar(0);
}

}  // namespace loss

/// Row subset of a shard. An empty optional means "every sample, in order".
using Batch = std::optional<std::vector<Eigen::Index>>;

template <typename Scalar>
class ErmProblem {
 public:
  ErmProblem(std::vector<Shard<Scalar>> shards, Loss loss, Scalar lambda)
      : shards_(std::move(shards)), loss_(loss), lambda_(lambda) {
    if (shards_.empty()) throw ConfigError("erm: need at least one shard");
    if (!(lambda_ >= Scalar(0))) throw ConfigError("erm: lambda must be nonnegative");
    dim_ = shards_.front().features.cols();
    for (const auto& s : shards_) {
      require_dim(s.features.cols(), dim_, "erm shard features");
      require_dim(s.labels.size(), s.features.rows(), "erm shard labels");
      if (s.size() == 0) throw DomainError("erm: empty shard");
      if (!s.features.allFinite() || !s.labels.allFinite())
        throw DomainError("erm: non-finite sample");
      if (loss_ == Loss::Logistic)
        for (Eigen::Index j = 0; j < s.labels.size(); ++j)
          if (s.labels[j] != Scalar(1) && s.labels[j] != Scalar(-1))
            throw DomainError("erm: logistic labels must be +1 or -1");
    }
  }

  Eigen::Index dim() const { return dim_; }
  std::size_t workers() const { return shards_.size(); }
  Loss loss() const { return loss_; }
  Scalar lambda() const { return lambda_; }
  const Shard<Scalar>& shard(std::size_t i) const { return shards_.at(i); }
  const std::vector<Shard<Scalar>>& shards() const { return shards_; }

  Scalar value(std::size_t i, const Vector<Scalar>& x) const {
    const auto& s = checked(i, x, "erm value");
    const Vector<Scalar> t = s.features * x;
    Scalar acc(0);
    for (Eigen::Index j = 0; j < t.size(); ++j) acc += loss::value(loss_, t[j], s.labels[j]);
    return acc / static_cast<Scalar>(t.size()) + Scalar(0.5) * lambda_ * x.squaredNorm();
  }

  Vector<Scalar> grad(std::size_t i, const Vector<Scalar>& x, const Batch& batch = {}) const {
    return with_rows(checked(i, x, "erm grad"), batch, [&](const auto& Z, const auto& y) {
      const Vector<Scalar> t = Z * x;
      Vector<Scalar> d1(t.size());
      for (Eigen::Index j = 0; j < t.size(); ++j) d1[j] = loss::first(loss_, t[j], y[j]);
      return Vector<Scalar>(Z.transpose() * d1 / static_cast<Scalar>(t.size()) + lambda_ * x);
    });
  }

  Matrix<Scalar> hessian(std::size_t i, const Vector<Scalar>& x, const Batch& batch = {}) const {
    return with_rows(checked(i, x, "erm hessian"), batch, [&](const auto& Z, const auto& y) {
      const Vector<Scalar> w = curvature(Z, y, x);
      Matrix<Scalar> Hm = Z.transpose() * w.asDiagonal() * Z / static_cast<Scalar>(Z.rows());
      Hm.diagonal().array() += lambda_;
      return Matrix<Scalar>(Scalar(0.5) * (Hm + Hm.transpose()));
    });
  }

  /// Hessian-vector product without forming the d x d matrix.
  Vector<Scalar> hessian_vector(std::size_t i, const Vector<Scalar>& x, const Vector<Scalar>& v,
                                const Batch& batch = {}) const {
    require_dim(v.size(), dim_, "erm hessian_vector v");
    return with_rows(checked(i, x, "erm hessian_vector"), batch,
                     [&](const auto& Z, const auto& y) {
                       const Vector<Scalar> w = curvature(Z, y, x);
                       const Vector<Scalar> Zv = Z * v;
                       return Vector<Scalar>(Z.transpose() * w.cwiseProduct(Zv) /
                                                 static_cast<Scalar>(Z.rows()) +
                                             lambda_ * v);
                     });
  }

  Vector<Scalar> hessian_diagonal(std::size_t i, const Vector<Scalar>& x,
                                  const Batch& batch = {}) const {
    return with_rows(checked(i, x, "erm hessian_diagonal"), batch,
                     [&](const auto& Z, const auto& y) {
                       const Vector<Scalar> w = curvature(Z, y, x);
                       Vector<Scalar> diag =
                           Z.cwiseAbs2().transpose() * w / static_cast<Scalar>(Z.rows());
                       diag.array() += lambda_;
                       return diag;
                     });
  }

 private:
  const Shard<Scalar>& checked(std::size_t i, const Vector<Scalar>& x, const char* what) const {
    if (i >= shards_.size()) throw DomainError(std::string(what) + ": worker index out of range");
    require_dim(x.size(), dim_, what);
    return shards_[i];
  }

  // Calls fn(Z, y) on the whole shard, or on a copy of the selected rows.
  template <typename Fn>
  static auto with_rows(const Shard<Scalar>& s, const Batch& batch, Fn&& fn) {
    if (!batch) return fn(s.features, s.labels);
    if (batch->empty()) throw DomainError("erm: empty mini-batch");
    const Matrix<Scalar> Z = s.features(*batch, Eigen::all);
    const Vector<Scalar> y = s.labels(*batch);
    return fn(Z, y);
  }

  // Per-sample second derivative of the loss.
  template <typename ZType, typename YType>
  Vector<Scalar> curvature(const ZType& Z, const YType& y, const Vector<Scalar>& x) const {
    const Vector<Scalar> t = Z * x;
    Vector<Scalar> w(t.size());
    for (Eigen::Index j = 0; j < t.size(); ++j) w[j] = loss::second(loss_, t[j], y[j]);
    return w;
  }

  std::vector<Shard<Scalar>> shards_;
  Loss loss_;
  Scalar lambda_;
  Eigen::Index dim_{0};
};

template <typename Scalar>
using Problem = std::variant<QuadraticProblem<Scalar>, ErmProblem<Scalar>>;

// -----------------------------------------------------------------------------
// Uniform free-function interface. Worker-indexed overloads evaluate f_i; the
// others evaluate f = (1/n) sum_i f_i, reduced in ascending worker order.
// -----------------------------------------------------------------------------

template <typename Scalar>
Eigen::Index dim(const Problem<Scalar>& p) {
  return std::visit([](const auto& q) { return q.dim(); }, p);
}

template <typename Scalar>
std::size_t workers(const Problem<Scalar>& p) {
  return std::visit([](const auto& q) { return q.workers(); }, p);
}

template <typename Scalar>
const QuadraticProblem<Scalar>* as_quadratic(const Problem<Scalar>& p) {
  return std::get_if<QuadraticProblem<Scalar>>(&p);
}

template <typename Scalar>
Scalar value(const Problem<Scalar>& p, std::size_t i, const Vector<Scalar>& x) {
  if (const auto* q = as_quadratic(p)) return q->value(x);
  return std::get<ErmProblem<Scalar>>(p).value(i, x);
}

template <typename Scalar>
Scalar value(const Problem<Scalar>& p, const Vector<Scalar>& x) {
  if (const auto* q = as_quadratic(p)) return q->value(x);
  const auto& e = std::get<ErmProblem<Scalar>>(p);
  Scalar acc(0);
  for (std::size_t i = 0; i < e.workers(); ++i) acc += e.value(i, x);
  return acc / static_cast<Scalar>(e.workers());
}

template <typename Scalar>
Vector<Scalar> grad(const Problem<Scalar>& p, std::size_t i, const Vector<Scalar>& x,
                    const Batch& batch = {}) {
  if (const auto* q = as_quadratic(p)) {
    if (i >= q->workers()) throw DomainError("grad: worker index out of range");
    return q->grad(x);
  }
  return std::get<ErmProblem<Scalar>>(p).grad(i, x, batch);
}

template <typename Scalar>
Vector<Scalar> grad(const Problem<Scalar>& p, const Vector<Scalar>& x) {
  if (const auto* q = as_quadratic(p)) return q->grad(x);
  const auto& e = std::get<ErmProblem<Scalar>>(p);
  Vector<Scalar> acc = Vector<Scalar>::Zero(e.dim());
  for (std::size_t i = 0; i < e.workers(); ++i) acc += e.grad(i, x);
  return acc / static_cast<Scalar>(e.workers());
}

template <typename Scalar>
Matrix<Scalar> hessian(const Problem<Scalar>& p, std::size_t i, const Vector<Scalar>& x,
                       const Batch& batch = {}) {
  if (const auto* q = as_quadratic(p)) {
    require_dim(x.size(), q->dim(), "quadratic hessian");
    return q->H();
  }
  return std::get<ErmProblem<Scalar>>(p).hessian(i, x, batch);
}

template <typename Scalar>
Matrix<Scalar> hessian(const Problem<Scalar>& p, const Vector<Scalar>& x) {
  if (const auto* q = as_quadratic(p)) return hessian(p, 0, x);
  const auto& e = std::get<ErmProblem<Scalar>>(p);
  Matrix<Scalar> acc = Matrix<Scalar>::Zero(e.dim(), e.dim());
  for (std::size_t i = 0; i < e.workers(); ++i) acc += e.hessian(i, x);
  return acc / static_cast<Scalar>(e.workers());
}

template <typename Scalar>
Vector<Scalar> hessian_vector(const Problem<Scalar>& p, std::size_t i, const Vector<Scalar>& x,
                              const Vector<Scalar>& v, const Batch& batch = {}) {
  if (const auto* q = as_quadratic(p)) {
    require_dim(v.size(), q->dim(), "quadratic hessian_vector");
    return q->H() * v;
  }
  return std::get<ErmProblem<Scalar>>(p).hessian_vector(i, x, v, batch);
}

template <typename Scalar>
Vector<Scalar> hessian_diagonal(const Problem<Scalar>& p, std::size_t i, const Vector<Scalar>& x,
                                const Batch& batch = {}) {
  if (const auto* q = as_quadratic(p)) return q->H().diagonal();
  return std::get<ErmProblem<Scalar>>(p).hessian_diagonal(i, x, batch);
}

// -----------------------------------------------------------------------------
// Stochastic oracle.
// -----------------------------------------------------------------------------

enum class HessianCoupling { SameBatch, IndependentBatch };
enum class Sampling { WithReplacement, WithoutReplacement };

struct StochasticOracleConfig {
  std::size_t batch_size = 1;
  HessianCoupling hessian_coupling = HessianCoupling::SameBatch;
  std::uint64_t seed = 0;
  Sampling sampling = Sampling::WithReplacement;
};

/// Which random draw a batch belongs to; gradient and independent Hessian
/// batches come from disjoint streams.
enum class BatchStream : std::uint32_t { Gradient = 0, Hessian = 1, Probe = 2 };

/// Mini-batch of row indices, a pure function of (seed, worker, iteration, stream).
/// Without-replacement batches are returned sorted, so a batch covering the
/// whole shard reproduces the full-shard evaluation bit for bit.
inline std::vector<Eigen::Index> sample_batch(const StochasticOracleConfig& oracle,
                                              Eigen::Index shard_size, std::size_t worker,
                                              std::uint64_t iteration,
                                              BatchStream stream = BatchStream::Gradient) {
  if (shard_size <= 0) throw DomainError("sample_batch: empty shard");
  if (oracle.batch_size < 1) throw ConfigError("sample_batch: batch size must be positive");
  const auto m = static_cast<std::size_t>(shard_size);
  if (oracle.sampling == Sampling::WithoutReplacement && oracle.batch_size > m)
    throw ConfigError("sample_batch: batch size exceeds shard size");

  std::seed_seq seq{static_cast<std::uint32_t>(oracle.seed),
                    static_cast<std::uint32_t>(oracle.seed >> 32),
                    static_cast<std::uint32_t>(worker),
                    static_cast<std::uint32_t>(iteration),
                    static_cast<std::uint32_t>(iteration >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::mt19937_64 rng(seq);

  std::vector<Eigen::Index> idx;
  idx.reserve(oracle.batch_size);
  if (oracle.sampling == Sampling::WithReplacement) {
    std::uniform_int_distribution<Eigen::Index> pick(0, shard_size - 1);
    for (std::size_t j = 0; j < oracle.batch_size; ++j) idx.push_back(pick(rng));
    return idx;
  }
  std::vector<Eigen::Index> perm(m);
  for (std::size_t j = 0; j < m; ++j) perm[j] = static_cast<Eigen::Index>(j);
  for (std::size_t j = 0; j < oracle.batch_size; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, m - 1);
    std::swap(perm[j], perm[pick(rng)]);
  }
  idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(oracle.batch_size));
  std::sort(idx.begin(), idx.end());
  return idx;
}

template <typename Scalar>
Eigen::Index shard_size(const Problem<Scalar>& p, std::size_t i) {
  if (as_quadratic(p)) return 1;
  return std::get<ErmProblem<Scalar>>(p).shard(i).size();
}

/// Gradient batch for worker i at `iteration`. Quadratic problems carry no
/// samples and always get the full (exact) evaluation.
template <typename Scalar>
Batch gradient_batch(const Problem<Scalar>& p, std::size_t i,
                     const StochasticOracleConfig& oracle, std::uint64_t iteration) {
  if (as_quadratic(p)) return std::nullopt;
  return sample_batch(oracle, shard_size(p, i), i, iteration, BatchStream::Gradient);
}

template <typename Scalar>
Batch hessian_batch(const Problem<Scalar>& p, std::size_t i, const StochasticOracleConfig& oracle,
                    std::uint64_t iteration) {
  if (as_quadratic(p)) return std::nullopt;
  const auto stream = oracle.hessian_coupling == HessianCoupling::SameBatch
                          ? BatchStream::Gradient
                          : BatchStream::Hessian;
  return sample_batch(oracle, shard_size(p, i), i, iteration, stream);
}

template <typename Scalar>
Vector<Scalar> stochastic_grad(const Problem<Scalar>& p, std::size_t i, const Vector<Scalar>& x,
                               const StochasticOracleConfig& oracle, std::uint64_t iteration) {
  return grad(p, i, x, gradient_batch(p, i, oracle, iteration));
}

template <typename Scalar>
Matrix<Scalar> stochastic_hessian(const Problem<Scalar>& p, std::size_t i, const Vector<Scalar>& x,
                                  const StochasticOracleConfig& oracle, std::uint64_t iteration) {
  return hessian(p, i, x, hessian_batch(p, i, oracle, iteration));
}

// -----------------------------------------------------------------------------
// Constants and optimum.
// -----------------------------------------------------------------------------

template <typename Scalar>
struct Constants {
  Scalar mu{0};
  Scalar L{0};
  Scalar kappa{std::numeric_limits<Scalar>::infinity()};
  /// Robust loss only: max_i (1/m) sum_j ||z_j||^2 / (6 sqrt 3) + lambda, the
  /// constant the paper-robust step-size rule is expressed in.
  std::optional<Scalar> L_step_rule;
  /// Robust loss only: max_i 2 lambda_max((1/m) Z_i'Z_i) + lambda, from |loss''| <= 2.
  std::optional<Scalar> L_curvature;
};

template <typename Scalar>
Constants<Scalar> constants(const Problem<Scalar>& p) {
  Constants<Scalar> c;
  if (const auto* q = as_quadratic(p)) {
    c.mu = q->mu();
    c.L = q->L();
    c.kappa = q->kappa();
    return c;
  }
  const auto& e = std::get<ErmProblem<Scalar>>(p);
  const Scalar lambda = e.lambda();
  Scalar L = 0, mu = std::numeric_limits<Scalar>::infinity(), Lp = 0;
  for (const auto& s : e.shards()) {
    const Scalar m = static_cast<Scalar>(s.size());
    const Matrix<Scalar> gram = s.features.transpose() * s.features / m;
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(gram, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw DomainError("constants: eigen-solver failed");
    const Scalar lo = std::max(es.eigenvalues().minCoeff(), Scalar(0));
    const Scalar hi = es.eigenvalues().maxCoeff();
    switch (e.loss()) {
      case Loss::LeastSquares:
        L = std::max(L, hi + lambda);
        mu = std::min(mu, lo + lambda);
        break;
      case Loss::Logistic:
        L = std::max(L, hi / Scalar(4) + lambda);
        mu = std::min(mu, lambda);
        break;
      case Loss::Robust:
        L = std::max(L, Scalar(2) * hi + lambda);
        mu = std::min(mu, lambda);
        Lp = std::max(Lp, s.features.rowwise().squaredNorm().sum() / m /
                              (Scalar(6) * std::sqrt(Scalar(3))) +
                              lambda);
        break;
    }
  }
  c.L = L;
  c.mu = mu;
  c.kappa = mu > Scalar(0) ? L / mu : std::numeric_limits<Scalar>::infinity();
  if (e.loss() == Loss::Robust) {
    c.L_step_rule = Lp;
    c.L_curvature = L;
  }
  return c;
}

template <typename Scalar>
struct Optimum {
  Vector<Scalar> x_star;
  Scalar f_star{0};
};

/// Minimizer of f when it can be computed exactly: quadratics, least squares,
/// and lambda-regularized logistic regression (Newton). Robust regression is
/// non-convex and has no known minimizer.
template <typename Scalar>
std::optional<Optimum<Scalar>> optimum(const Problem<Scalar>& p) {
  if (const auto* q = as_quadratic(p)) return Optimum<Scalar>{q->x_star(), q->f_star()};
  const auto& e = std::get<ErmProblem<Scalar>>(p);
  const Eigen::Index d = e.dim();
  const auto n = static_cast<Scalar>(e.workers());
  if (e.loss() == Loss::LeastSquares) {
    Matrix<Scalar> A = Matrix<Scalar>::Zero(d, d);
    Vector<Scalar> rhs = Vector<Scalar>::Zero(d);
    for (const auto& s : e.shards()) {
      const Scalar w = Scalar(1) / (n * static_cast<Scalar>(s.size()));
      A.noalias() += w * s.features.transpose() * s.features;
      rhs.noalias() += w * s.features.transpose() * s.labels;
    }
    A.diagonal().array() += e.lambda();
    Vector<Scalar> x = A.completeOrthogonalDecomposition().solve(rhs);
    // One step of iterative refinement.
    x += A.completeOrthogonalDecomposition().solve(rhs - A * x);
    return Optimum<Scalar>{x, value(p, x)};
  }
  if (e.loss() == Loss::Logistic && e.lambda() > Scalar(0)) {
    Vector<Scalar> x = Vector<Scalar>::Zero(d);
    for (int it = 0; it < 100; ++it) {
      const Vector<Scalar> g = grad(p, x);
      if (g.norm() <= Scalar(1e-14) * (Scalar(1) + x.norm())) break;
      x -= hessian(p, x).ldlt().solve(g);
    }
    return Optimum<Scalar>{x, value(p, x)};
  }
  return std::nullopt;
}

// -----------------------------------------------------------------------------
// Empirical noise levels.
// -----------------------------------------------------------------------------

template <typename Scalar>
struct VarianceEstimate {
  Scalar sigma_sq{0};
  Scalar sigma_H_sq{0};
};

/// max over probes and workers of the mean squared deviation of the stochastic
/// gradient (Euclidean) and stochastic Hessian (Frobenius, an upper bound on the
/// spectral deviation) from their exact counterparts.
template <typename Scalar>
VarianceEstimate<Scalar> estimate_variances(const Problem<Scalar>& p,
                                            const StochasticOracleConfig& oracle,
                                            const std::vector<Vector<Scalar>>& probes,
                                            std::size_t draws) {
  if (draws < 2) throw ConfigError("estimate_variances: need at least two draws");
  VarianceEstimate<Scalar> est;
  if (as_quadratic(p)) return est;
  const auto& e = std::get<ErmProblem<Scalar>>(p);
  StochasticOracleConfig probe_oracle = oracle;
  probe_oracle.hessian_coupling = HessianCoupling::IndependentBatch;
  for (const auto& x : probes) {
    for (std::size_t i = 0; i < e.workers(); ++i) {
      const Vector<Scalar> g = e.grad(i, x);
      const Matrix<Scalar> H = e.hessian(i, x);
      Scalar sg = 0, sh = 0;
      for (std::size_t t = 0; t < draws; ++t) {
        const auto batch = sample_batch(probe_oracle, e.shard(i).size(), i, t, BatchStream::Probe);
        sg += (e.grad(i, x, batch) - g).squaredNorm();
        sh += (e.hessian(i, x, batch) - H).squaredNorm();
      }
      est.sigma_sq = std::max(est.sigma_sq, sg / static_cast<Scalar>(draws));
      est.sigma_H_sq = std::max(est.sigma_H_sq, sh / static_cast<Scalar>(draws));
    }
  }
  return est;
}

/// x0 plus four Gaussian probes of scale `radius` (seeded).
template <typename Scalar>
std::vector<Vector<Scalar>> default_probe_points(const Vector<Scalar>& x0, Scalar radius,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  std::vector<Vector<Scalar>> probes{x0};
  for (int j = 0; j < 4; ++j) {
    Vector<Scalar> dir(x0.size());
    for (Eigen::Index k = 0; k < dir.size(); ++k) dir[k] = normal(rng);
    probes.push_back(x0 + radius * dir / std::sqrt(static_cast<Scalar>(x0.size())));
  }
  return probes;
}

}  // namespace ecgrad

#endif  // ECGRAD_PROBLEMS_HPP
