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

#include "ecgrad/problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace ecgrad {
namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Shard<double> one_sample(const VectorXd& z, double y) {
  Shard<double> s;
  s.features = z.transpose();
  s.labels = vec({y});
  return s;
}

Shard<double> random_shard(std::mt19937_64& rng, Eigen::Index m, Eigen::Index d, Loss loss) {
  std::normal_distribution<double> n;
  Shard<double> s;
  s.features.resize(m, d);
  s.labels.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) s.features(r, c) = n(rng);
    const double y = n(rng);
    s.labels[r] = loss == Loss::Logistic ? (y > 0 ? 1.0 : -1.0) : y;
  }
  return s;
}

Problem<double> random_erm(std::mt19937_64& rng, Loss loss, double lambda, Eigen::Index d = 3) {
  return ErmProblem<double>({random_shard(rng, 7, d, loss), random_shard(rng, 5, d, loss)}, loss,
                            lambda);
}

VectorXd fd_grad(const Problem<double>& p, const VectorXd& x) {
  VectorXd g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-5;
    VectorXd xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    g[k] = (value(p, xp) - value(p, xm)) / (2 * h);
  }
  return g;
}

MatrixXd fd_hessian(const Problem<double>& p, const VectorXd& x) {
  MatrixXd H(x.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-5;
    VectorXd xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    H.col(k) = (grad(p, xp) - grad(p, xm)) / (2 * h);
  }
  return H;
}

TEST(Quadratic, IdentityHessianExample) {
  const Problem<double> p = QuadraticProblem<double>(MatrixXd::Identity(2, 2), vec({1.0, 0.0}));
  EXPECT_EQ(grad(p, VectorXd(VectorXd::Zero(2))), vec({1.0, 0.0}));
  EXPECT_EQ(as_quadratic(p)->x_star(), vec({-1.0, 0.0}));
}

TEST(Quadratic, HessianIsConstant) {
  MatrixXd H(2, 2);
  H << 2, 1, 1, 3;
  const Problem<double> p = QuadraticProblem<double>(H, vec({1.0, -1.0}));
  EXPECT_EQ(hessian(p, vec({0.0, 0.0})), H);
  EXPECT_EQ(hessian(p, vec({5.0, -7.0})), H);
}

TEST(Quadratic, StationarityAndConstants) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int t = 0; t < 50; ++t) {
    MatrixXd G(6, 6);
    for (Eigen::Index i = 0; i < 36; ++i) G.data()[i] = n(rng);
    const MatrixXd H = G * G.transpose() + 0.1 * MatrixXd::Identity(6, 6);
    VectorXd b(6);
    for (Eigen::Index i = 0; i < 6; ++i) b[i] = n(rng);
    const QuadraticProblem<double> q(H, b);
    EXPECT_LE((H * q.x_star() + b).norm(), 1e-8 * (1 + b.norm()));
    EXPECT_LE(q.grad(q.x_star()).norm(), 1e-8);
    EXPECT_DOUBLE_EQ(q.kappa(), q.L() / q.mu());
  }
}

TEST(Quadratic, RejectsBadInput) {
  MatrixXd asym(2, 2);
  asym << 1, 0.5, 0, 1;
  EXPECT_THROW(QuadraticProblem<double>(asym, VectorXd::Zero(2)), DomainError);
  MatrixXd indefinite(2, 2);
  indefinite << 1, 0, 0, -1;
  EXPECT_THROW(QuadraticProblem<double>(indefinite, VectorXd::Zero(2)), DomainError);
  EXPECT_THROW(QuadraticProblem<double>(MatrixXd::Identity(2, 2), VectorXd::Zero(3)), DomainError);
  const Problem<double> p = QuadraticProblem<double>(MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  EXPECT_THROW(grad(p, VectorXd(VectorXd::Zero(3))), DomainError);
}

TEST(Constants, DiagonalQuadratic) {
  const Problem<double> p = QuadraticProblem<double>(vec({1.0, 10.0}).asDiagonal(), VectorXd::Zero(2));
  const auto c = constants(p);
  EXPECT_DOUBLE_EQ(c.mu, 1.0);
  EXPECT_DOUBLE_EQ(c.L, 10.0);
  EXPECT_DOUBLE_EQ(c.kappa, 10.0);
}

TEST(Constants, LeastSquaresRankOne) {
  const Problem<double> p = ErmProblem<double>({one_sample(vec({1.0, 0.0}), 1.0)}, Loss::LeastSquares, 0.0);
  const auto c = constants(p);
  EXPECT_NEAR(c.L, 1.0, 1e-15);
  EXPECT_NEAR(c.mu, 0.0, 1e-15);
}

TEST(Constants, RobustStepRuleConstant) {
  const Problem<double> p = ErmProblem<double>({one_sample(vec({0.6, 0.8}), 0.0)}, Loss::Robust, 0.0);
  const auto c = constants(p);
  ASSERT_TRUE(c.L_step_rule.has_value());
  EXPECT_NEAR(*c.L_step_rule, 1.0 / (6.0 * std::sqrt(3.0)), 1e-15);
  EXPECT_NEAR(*c.L_step_rule, 0.09623, 1e-5);
  EXPECT_NEAR(*c.L_curvature, 2.0, 1e-12);
}

TEST(ErmGrad, RobustExample) {
  const Problem<double> p = ErmProblem<double>({one_sample(vec({1.0, 0.0}), 0.0)}, Loss::Robust, 0.0);
  const VectorXd x = vec({1.0, 0.0});
  EXPECT_NEAR((grad(p, x) - vec({0.5, 0.0})).norm(), 0.0, 1e-15);
  EXPECT_NEAR((grad(p, x) - fd_grad(p, x)).norm(), 0.0, 1e-9);
}

TEST(ErmGrad, LogisticExample) {
  const Problem<double> p = ErmProblem<double>({one_sample(vec({1.0, 1.0}), 1.0)}, Loss::Logistic, 0.0);
  const VectorXd x = VectorXd::Zero(2);
  EXPECT_NEAR((grad(p, x) - vec({-0.5, -0.5})).norm(), 0.0, 1e-15);
  EXPECT_NEAR((grad(p, x) - fd_grad(p, x)).norm(), 0.0, 1e-9);
}

TEST(ErmHessian, RobustAtZeroResidual) {
  const Problem<double> p = ErmProblem<double>({one_sample(vec({1.0, 0.0}), 0.0)}, Loss::Robust, 0.0);
  MatrixXd want(2, 2);
  want << 2, 0, 0, 0;
  EXPECT_NEAR((hessian(p, VectorXd(VectorXd::Zero(2))) - want).norm(), 0.0, 1e-15);
  EXPECT_NEAR((fd_hessian(p, VectorXd(VectorXd::Zero(2))) - want).norm(), 0.0, 1e-8);
}

TEST(ErmHessian, LogisticAtZero) {
  const double lambda = 0.3;
  const Problem<double> p = ErmProblem<double>({one_sample(vec({1.0, 0.0}), 1.0)}, Loss::Logistic, lambda);
  MatrixXd want(2, 2);
  want << 0.25 + lambda, 0, 0, lambda;
  EXPECT_NEAR((hessian(p, VectorXd(VectorXd::Zero(2))) - want).norm(), 0.0, 1e-15);
}

TEST(ErmProperty, FiniteDifferences) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  const Loss losses[] = {Loss::LeastSquares, Loss::Logistic, Loss::Robust};
  for (int t = 0; t < 100; ++t) {
    const auto p = random_erm(rng, losses[t % 3], t % 2 ? 0.1 : 0.0);
    VectorXd x(3);
    for (Eigen::Index i = 0; i < 3; ++i) x[i] = 0.5 * n(rng);
    const VectorXd g = grad(p, x);
    const MatrixXd H = hessian(p, x);
    EXPECT_LE((fd_grad(p, x) - g).norm() / std::max(1.0, g.norm()), 1e-6);
    EXPECT_LE((fd_hessian(p, x) - H).norm() / std::max(1.0, H.norm()), 1e-5);
    EXPECT_LE((H - H.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_LE((hessian_vector(p, i, x, g) - hessian(p, i, x) * g).norm(), 1e-12 * (1 + H.norm() * g.norm()));
      EXPECT_LE((hessian_diagonal(p, i, x) - hessian(p, i, x).diagonal()).norm(), 1e-12 * (1 + H.norm()));
    }
  }
}

TEST(ErmProperty, ConvexLossesRespectLambda) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int t = 0; t < 50; ++t) {
    const double lambda = 0.05 + 0.1 * (t % 4);
    const auto p = random_erm(rng, t % 2 ? Loss::Logistic : Loss::LeastSquares, lambda);
    VectorXd x(3);
    for (Eigen::Index i = 0; i < 3; ++i) x[i] = n(rng);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(hessian(p, x));
    EXPECT_GE(es.eigenvalues().minCoeff(), lambda - 1e-8);
  }
}

TEST(ErmProperty, FullGradientIsWorkerMean) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 30; ++t) {
    const auto p = random_erm(rng, Loss::Robust, 0.01);
    const VectorXd x = VectorXd::Constant(3, 0.1 * t);
    const VectorXd mean = (grad(p, 0, x) + grad(p, 1, x)) / 2.0;
    EXPECT_LE((mean - grad(p, x)).norm(), 1e-12 * std::max(1.0, mean.norm()));
  }
}

TEST(Erm, RejectsBadInput) {
  EXPECT_THROW(ErmProblem<double>({one_sample(vec({1.0}), 0.5)}, Loss::Logistic, 0.0), DomainError);
  EXPECT_THROW(ErmProblem<double>({}, Loss::LeastSquares, 0.0), ConfigError);
  EXPECT_THROW(ErmProblem<double>({one_sample(vec({NAN}), 1.0)}, Loss::LeastSquares, 0.0), DomainError);
  EXPECT_THROW(ErmProblem<double>({one_sample(vec({1.0}), 1.0)}, Loss::LeastSquares, -1.0), ConfigError);
  EXPECT_THROW(ErmProblem<double>({one_sample(vec({1.0}), 1.0), one_sample(vec({1.0, 2.0}), 1.0)},
                                  Loss::LeastSquares, 0.0),
               DomainError);
  const Problem<double> p = ErmProblem<double>({one_sample(vec({1.0, 0.0}), 1.0)}, Loss::LeastSquares, 0.0);
  EXPECT_THROW(grad(p, VectorXd(VectorXd::Zero(3))), DomainError);
}

TEST(Optimum, LeastSquaresAndLogisticAreStationary) {
  std::mt19937_64 rng(5);
  for (Loss loss : {Loss::LeastSquares, Loss::Logistic}) {
    const auto p = random_erm(rng, loss, 0.1);
    const auto opt = optimum(p);
    ASSERT_TRUE(opt.has_value());
    EXPECT_LE(grad(p, opt->x_star).norm(), 1e-10);
    EXPECT_NEAR(opt->f_star, value(p, opt->x_star), 1e-15);
  }
  EXPECT_FALSE(optimum(random_erm(rng, Loss::Robust, 0.1)).has_value());
}

TEST(StochasticOracle, FullBatchWithoutReplacementIsExact) {
  std::mt19937_64 rng(6);
  const auto p = random_erm(rng, Loss::Logistic, 0.1);
  StochasticOracleConfig o{7, HessianCoupling::SameBatch, 11, Sampling::WithoutReplacement};
  const VectorXd x = VectorXd::Constant(3, 0.3);
  for (std::uint64_t it = 0; it < 5; ++it) {
    EXPECT_EQ(stochastic_grad(p, 0, x, o, it), grad(p, 0, x));
    EXPECT_EQ(stochastic_hessian(p, 0, x, o, it), hessian(p, 0, x));
  }
}

TEST(StochasticOracle, Deterministic) {
  std::mt19937_64 rng(7);
  const auto p = random_erm(rng, Loss::Robust, 0.0);
  StochasticOracleConfig o{2, HessianCoupling::IndependentBatch, 99, Sampling::WithReplacement};
  const VectorXd x = VectorXd::Constant(3, -0.2);
  EXPECT_EQ(stochastic_grad(p, 1, x, o, 4), stochastic_grad(p, 1, x, o, 4));
  EXPECT_EQ(stochastic_hessian(p, 1, x, o, 4), stochastic_hessian(p, 1, x, o, 4));
  EXPECT_EQ(sample_batch(o, 5, 1, 4), sample_batch(o, 5, 1, 4));
  StochasticOracleConfig other = o;
  other.seed = 100;
  bool any_diff = false;
  for (std::uint64_t it = 0; it < 10; ++it)
    any_diff = any_diff || sample_batch(o, 5, 1, it) != sample_batch(other, 5, 1, it);
  EXPECT_TRUE(any_diff);
}

TEST(StochasticOracle, HessianCoupling) {
  StochasticOracleConfig same{2, HessianCoupling::SameBatch, 3, Sampling::WithReplacement};
  StochasticOracleConfig indep = same;
  indep.hessian_coupling = HessianCoupling::IndependentBatch;
  std::mt19937_64 rng(8);
  const auto p = random_erm(rng, Loss::LeastSquares, 0.0);
  int differ = 0;
  for (std::uint64_t it = 0; it < 20; ++it) {
    EXPECT_EQ(hessian_batch(p, 0, same, it), gradient_batch(p, 0, same, it));
    differ += hessian_batch(p, 0, indep, it) != gradient_batch(p, 0, indep, it);
  }
  EXPECT_GT(differ, 0);
}

TEST(StochasticOracle, UnbiasedGradientAndHessian) {
  std::mt19937_64 rng(9);
  const auto p = random_erm(rng, Loss::Robust, 0.05, 2);
  const VectorXd x = VectorXd::Constant(2, 0.4);
  StochasticOracleConfig o{2, HessianCoupling::SameBatch, 5, Sampling::WithReplacement};
  const std::size_t draws = 100000;
  const VectorXd g = grad(p, 0, x);
  const MatrixXd H = hessian(p, 0, x);
  VectorXd sg = VectorXd::Zero(2), sg2 = VectorXd::Zero(2);
  VectorXd sh = VectorXd::Zero(4), sh2 = VectorXd::Zero(4);
  for (std::size_t t = 0; t < draws; ++t) {
    const VectorXd a = stochastic_grad(p, 0, x, o, t);
    const MatrixXd B = stochastic_hessian(p, 0, x, o, t);
    const VectorXd b = B.reshaped();
    sg += a;
    sg2 += a.cwiseProduct(a);
    sh += b;
    sh2 += b.cwiseProduct(b);
  }
  auto within = [&](const VectorXd& sum, const VectorXd& sum2, const VectorXd& truth) {
    const double n = static_cast<double>(draws);
    const VectorXd mean = sum / n;
    const VectorXd var = (sum2 / n - mean.cwiseProduct(mean)) * (n / (n - 1));
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
      const double se = std::sqrt(var[i] / n);
      if (se == 0.0) EXPECT_NEAR(mean[i], truth[i], 1e-12);
      else EXPECT_LE(std::fabs(mean[i] - truth[i]), 3.0 * se) << i;
    }
  };
  within(sg, sg2, g);
  within(sh, sh2, H.reshaped());
}

TEST(StochasticOracle, Errors) {
  StochasticOracleConfig o{0, HessianCoupling::SameBatch, 1, Sampling::WithReplacement};
  EXPECT_THROW(sample_batch(o, 5, 0, 0), ConfigError);
  o.batch_size = 6;
  o.sampling = Sampling::WithoutReplacement;
  EXPECT_THROW(sample_batch(o, 5, 0, 0), ConfigError);
  EXPECT_THROW(sample_batch(o, 0, 0, 0), DomainError);
}

TEST(Variances, DeterministicOraclesGiveZero) {
  std::mt19937_64 rng(10);
  const auto p = random_erm(rng, Loss::Logistic, 0.1);
  StochasticOracleConfig full{5, HessianCoupling::SameBatch, 1, Sampling::WithoutReplacement};
  const Problem<double> single = ErmProblem<double>({random_shard(rng, 5, 3, Loss::Logistic)}, Loss::Logistic, 0.1);
  const auto probes = default_probe_points<double>(VectorXd::Zero(3), 1.0, 3);
  const auto v = estimate_variances(single, full, probes, 10);
  EXPECT_EQ(v.sigma_sq, 0.0);
  EXPECT_EQ(v.sigma_H_sq, 0.0);
  const Problem<double> q = QuadraticProblem<double>(MatrixXd::Identity(3, 3), VectorXd::Zero(3), 2);
  const auto vq = estimate_variances(q, full, probes, 10);
  EXPECT_EQ(vq.sigma_sq, 0.0);
  EXPECT_EQ(vq.sigma_H_sq, 0.0);
  EXPECT_THROW(estimate_variances(p, full, probes, 1), ConfigError);
}

TEST(Variances, TwoSampleShard) {
  Shard<double> s;
  s.features.resize(2, 2);
  s.features << 1.0, 0.0, 0.0, 2.0;
  s.labels = vec({1.0, -1.0});
  const Problem<double> p = ErmProblem<double>({s}, Loss::LeastSquares, 0.0);
  const VectorXd x = vec({0.3, -0.1});
  // Per-sample gradients (t - y) z.
  const VectorXd g1 = (x[0] - 1.0) * vec({1.0, 0.0});
  const VectorXd g2 = (2.0 * x[1] + 1.0) * vec({0.0, 2.0});
  StochasticOracleConfig o{1, HessianCoupling::SameBatch, 4, Sampling::WithReplacement};
  const auto v = estimate_variances(p, o, {x}, 50);
  EXPECT_NEAR(v.sigma_sq, (g1 - g2).squaredNorm() / 4.0, 1e-12);
}

}  // namespace
}  // namespace ecgrad
