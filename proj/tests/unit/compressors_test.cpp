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

#include "ecgrad/compressors.hpp"

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

VectorXd random_vector(std::mt19937_64& rng, Eigen::Index d, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = n(rng);
  return v;
}

TEST(Compress, RoundingExample) {
  const auto r = compress(Rounding{0.5}, vec({0.3, -0.74}));
  EXPECT_EQ(r.output, vec({0.5, -0.5}));
  EXPECT_NEAR(r.error_norm, std::sqrt(0.2 * 0.2 + 0.24 * 0.24), 1e-15);
}

TEST(Compress, RoundingHalfPointsGoAwayFromZero) {
  EXPECT_EQ(compress(Rounding{1.0}, vec({0.5, -0.5, 1.5})).output, vec({1.0, -1.0, 2.0}));
}

TEST(Compress, EpsBallScalarExample) {
  EXPECT_DOUBLE_EQ(compress(EpsBall{0.5}, vec({3.0})).output[0], 2.5);
  EXPECT_DOUBLE_EQ(compress(EpsBall{0.5}, vec({-3.0})).output[0], -2.5);
  EXPECT_DOUBLE_EQ(compress(EpsBall{0.5}, vec({0.0})).output[0], 0.5);
}

TEST(Compress, EpsBallScalarRuleInsideTheBall) {
  // z - eps * z/|z| also for |z| < eps.
  EXPECT_DOUBLE_EQ(compress(EpsBall{0.5}, vec({0.2})).output[0], -0.3);
  EXPECT_DOUBLE_EQ(compress(EpsBall{0.5}, vec({-0.2})).output[0], 0.3);
}

TEST(Compress, EpsBallVectorCases) {
  const auto zero = compress(EpsBall{0.25}, VectorXd::Zero(3));
  EXPECT_EQ(zero.output, vec({0.25, 0.0, 0.0}));
  const auto inside = compress(EpsBall{1.0}, vec({0.3, 0.4}));
  EXPECT_EQ(inside.output, VectorXd::Zero(2));
  const auto outside = compress(EpsBall{1.0}, vec({3.0, 4.0}));
  EXPECT_NEAR((outside.output - vec({2.4, 3.2})).norm(), 0.0, 1e-15);
}

TEST(Compress, TopKExample) {
  const auto r = compress(TopK{2}, vec({3.0, -1.0, 2.0}));
  EXPECT_EQ(r.output, vec({3.0, 0.0, 2.0}));
  EXPECT_DOUBLE_EQ(r.error_norm, 1.0);
}

TEST(Compress, TopKTiesPreferLowerIndex) {
  EXPECT_EQ(compress(TopK{2}, vec({1.0, -1.0, 1.0})).output, vec({1.0, -1.0, 0.0}));
}

TEST(Compress, ScaledSignExample) {
  const VectorXd v = vec({2.0, -1.0, 1.0});
  const auto r = compress(ScaledSign{}, v);
  double l1 = 0.0;
  for (double x : {2.0, -1.0, 1.0}) l1 += std::fabs(x);
  const double s = l1 / 3.0;
  EXPECT_NEAR((r.output - vec({s, -s, s})).norm(), 0.0, 1e-15);
  EXPECT_LE(r.error_norm, *eps_bound(ScaledSign{}, 3, v.lpNorm<Eigen::Infinity>()));
}

TEST(Compress, ScaledSignOfZeroIsPositive) {
  EXPECT_EQ(compress(ScaledSign{}, vec({0.0, -2.0})).output, vec({1.0, -1.0}));
}

TEST(Compress, ExactIsIdentity) {
  const VectorXd v = vec({1.5, -2.0});
  const auto r = compress(Exact{}, v);
  EXPECT_EQ(r.output, v);
  EXPECT_EQ(r.error_norm, 0.0);
}

TEST(Compress, Errors) {
  VectorXd bad = vec({1.0, std::nan("")});
  EXPECT_THROW(compress(Exact{}, bad), DomainError);
  bad[1] = INFINITY;
  EXPECT_THROW(compress(Rounding{1.0}, bad), DomainError);
  EXPECT_THROW(compress(TopK{3}, vec({1.0, 2.0})), ConfigError);
  EXPECT_THROW(compress(TopK{0}, vec({1.0, 2.0})), ConfigError);
  EXPECT_THROW(compress(Rounding{0.0}, vec({1.0})), ConfigError);
  EXPECT_THROW(compress(EpsBall{-1.0}, vec({1.0})), ConfigError);
}

TEST(EpsBound, Examples) {
  EXPECT_DOUBLE_EQ(*eps_bound(Rounding{1.0}, 4), 1.0);
  for (Eigen::Index d : {1, 7, 100}) EXPECT_DOUBLE_EQ(*eps_bound(EpsBall{0.5}, d), 0.5);
  EXPECT_DOUBLE_EQ(*eps_bound(Exact{}, 10), 0.0);
  EXPECT_FALSE(eps_bound(TopK{2}, 10).has_value());
  EXPECT_FALSE(eps_bound(ScaledSign{}, 10).has_value());
  EXPECT_DOUBLE_EQ(*eps_bound(TopK{6}, 10, 2.0), 4.0);
  EXPECT_DOUBLE_EQ(rounding_eps_squared(Rounding{1.0}, 4), 1.0);
  EXPECT_DOUBLE_EQ(rounding_eps_squared(Rounding{0.5}, 4), 0.25);
}

TEST(CompressProperty, RoundingAndEpsBallRespectBound) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> dim(1, 12);
  for (int t = 0; t < 100000; ++t) {
    const Eigen::Index d = dim(rng);
    const VectorXd v = random_vector(rng, d, t % 2 ? 0.3 : 5.0);
    EXPECT_LE(compress(Rounding{0.7}, v).error_norm, *eps_bound(Rounding{0.7}, d) + 1e-12);
    EXPECT_LE(compress(EpsBall{0.4}, v).error_norm, *eps_bound(EpsBall{0.4}, d) + 1e-12);
  }
}

TEST(CompressProperty, EpsBallIsTightOutsideTheBall) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 1000; ++t) {
    const VectorXd v = random_vector(rng, 1 + t % 6, 3.0);
    if (v.norm() <= 0.4) continue;
    EXPECT_NEAR(compress(EpsBall{0.4}, v).error_norm, 0.4, 1e-12);
  }
}

TEST(CompressProperty, RoundingIsIdempotent) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 1000; ++t) {
    const VectorXd once = compress(Rounding{0.3}, random_vector(rng, 5, 2.0)).output;
    EXPECT_EQ(compress(Rounding{0.3}, once).output, once);
  }
}

TEST(CompressProperty, TopKKeepsKAndDropsTheRest) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 1000; ++t) {
    const VectorXd v = random_vector(rng, 8, 1.0);
    const auto r = compress(TopK{3}, v);
    EXPECT_LE((r.output.array() != 0.0).count(), 3);
    double dropped = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (r.output[i] == 0.0) dropped += v[i] * v[i];
    EXPECT_NEAR(r.error_norm * r.error_norm, dropped, 1e-12);
  }
}

TEST(CompressProperty, ErrorNormMatchesOutput) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 500; ++t) {
    const VectorXd v = random_vector(rng, 6, 2.0);
    for (const CompressorSpec c : {CompressorSpec{Exact{}}, CompressorSpec{Rounding{0.5}},
                                   CompressorSpec{ScaledSign{}}, CompressorSpec{TopK{2}},
                                   CompressorSpec{EpsBall{0.3}}}) {
      const auto r = compress(c, v);
      EXPECT_NEAR(r.error_norm, (r.output - v).norm(), 1e-12 * std::max(1.0, r.error_norm));
    }
  }
}

TEST(CompressProperty, CappedBoundsHold) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 5000; ++t) {
    const Eigen::Index d = 1 + t % 9;
    VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = 2.0 * u(rng);
    const double cap = v.lpNorm<Eigen::Infinity>();
    EXPECT_LE(compress(ScaledSign{}, v).error_norm, *eps_bound(ScaledSign{}, d, cap) + 1e-12);
    const std::size_t k = 1 + static_cast<std::size_t>(t) % static_cast<std::size_t>(d);
    EXPECT_LE(compress(TopK{k}, v).error_norm, *eps_bound(TopK{k}, d, cap) + 1e-12);
  }
}

TEST(CompressorText, RoundTrip) {
  for (const std::string s : {"exact", "rounding:0.5", "sign", "topk:8", "epsball:0.25"})
    EXPECT_EQ(to_string(parse_compressor(s)), s);
}

TEST(CompressorText, Rejects) {
  for (const std::string s : {"rounding:-1", "rounding:", "topk:0", "topk:x", "epsball:0", "foo",
                              "exact:1", "sign:2", "rounding:nan"})
    EXPECT_THROW(parse_compressor(s), ConfigError) << s;
}

TEST(PayloadBits, Accounting) {
  // 3 / 1 = 3 levels -> 1 + ceil(log2 4) = 3 bits per coordinate.
  EXPECT_EQ(payload_bits(Rounding{1.0}, vec({3.0, 0.0})), 6u);
  EXPECT_EQ(payload_bits(ScaledSign{}, VectorXd::Zero(10)), 74u);
  EXPECT_EQ(payload_bits(TopK{2}, VectorXd::Zero(8)), 2u * (64u + 3u));
  EXPECT_EQ(payload_bits(Exact{}, VectorXd::Zero(5)), 320u);
  EXPECT_EQ(payload_bits(EpsBall{1.0}, VectorXd::Zero(5)), 320u);
}

}  // namespace
}  // namespace ecgrad
