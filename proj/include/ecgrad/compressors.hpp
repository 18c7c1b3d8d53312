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

#ifndef ECGRAD_COMPRESSORS_HPP
#define ECGRAD_COMPRESSORS_HPP

#include "ecgrad/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ecgrad {

/// Identity compressor (ε = 0).
struct Exact {};

/// Per-coordinate rounding to a grid of resolution `delta`:
/// [Q(v)]_i = sign(v_i) * delta * floor(|v_i| / delta + 1/2).
struct Rounding {
  double delta = 1.0;
};

/// (||v||_1 / d) * sign(v), with sign(0) = +1.
struct ScaledSign {};

/// Keeps the `k` largest-magnitude entries; ties go to the lower index.
struct TopK {
  std::size_t k = 1;
};

/// Radial shrink by `eps`. In one dimension this is exactly
///   Q(z) = z - eps * z / |z|  (z != 0),   Q(0) = eps.
/// For d > 1 the shrink is clamped at zero when 0 < ||v|| <= eps and
/// Q(0) = eps * e_1, so ||Q(v) - v|| <= eps always holds.
struct EpsBall {
  double eps = 1.0;
};

using CompressorSpec = std::variant<Exact, Rounding, ScaledSign, TopK, EpsBall>;

template <typename Scalar>
struct CompressionResult {
  Vector<Scalar> output;
  Scalar error_norm{0};
};

/// Throws ConfigError when the compressor's parameters are invalid for `dim`.
inline void validate(const CompressorSpec& spec, Eigen::Index dim) {
  std::visit(
      [dim](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Rounding>) {
          if (!(c.delta > 0.0) || !std::isfinite(c.delta))
            throw ConfigError("rounding: grid resolution must be a positive finite number");
        } else if constexpr (std::is_same_v<T, TopK>) {
          if (c.k < 1) throw ConfigError("topk: K must be at least 1");
          if (dim >= 0 && c.k > static_cast<std::size_t>(dim))
            throw ConfigError("topk: K=" + std::to_string(c.k) + " exceeds dimension " +
                              std::to_string(dim));
        } else if constexpr (std::is_same_v<T, EpsBall>) {
          if (!(c.eps > 0.0) || !std::isfinite(c.eps))
            throw ConfigError("epsball: eps must be a positive finite number");
        }
      },
      spec);
}

namespace detail {

template <typename Scalar>
Vector<Scalar> round_to_grid(const Vector<Scalar>& v, Scalar delta) {
  return v.unaryExpr([delta](Scalar vi) -> Scalar {
    if (vi == Scalar(0)) return Scalar(0);
    const Scalar level = std::floor(std::abs(vi) / delta + Scalar(0.5));
    return (vi > Scalar(0) ? Scalar(1) : Scalar(-1)) * delta * level;
  });
}

template <typename Scalar>
Vector<Scalar> scaled_sign(const Vector<Scalar>& v) {
  const Scalar scale = v.template lpNorm<1>() / static_cast<Scalar>(v.size());
  return v.unaryExpr([scale](Scalar vi) -> Scalar { return vi >= Scalar(0) ? scale : -scale; });
}

template <typename Scalar>
Vector<Scalar> top_k(const Vector<Scalar>& v, std::size_t k) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  auto larger = [&v](Eigen::Index a, Eigen::Index b) {
    const Scalar ma = std::abs(v[a]), mb = std::abs(v[b]);
    return ma > mb || (ma == mb && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k) - 1, idx.end(),
                   larger);
  Vector<Scalar> out = Vector<Scalar>::Zero(v.size());
  for (std::size_t j = 0; j < k; ++j) out[idx[j]] = v[idx[j]];
  return out;
}

template <typename Scalar>
Vector<Scalar> eps_ball(const Vector<Scalar>& v, Scalar eps) {
  Vector<Scalar> out(v.size());
  if (v.size() == 1) {
    const Scalar z = v[0];
    out[0] = z == Scalar(0) ? eps : z - eps * (z > Scalar(0) ? Scalar(1) : Scalar(-1));
    return out;
  }
  const Scalar norm = v.norm();
  if (norm == Scalar(0)) {
    out.setZero();
    out[0] = eps;
  } else if (norm > eps) {
    out = v * ((norm - eps) / norm);
  } else {
    out.setZero();
  }
  return out;
}

}  // namespace detail

template <typename Derived>
CompressionResult<typename Derived::Scalar> compress(const CompressorSpec& spec,
                                                     const Eigen::MatrixBase<Derived>& v_in) {
  using Scalar = typename Derived::Scalar;
  const Vector<Scalar> v = v_in;
  if (!v.allFinite()) throw DomainError("compress: input vector is not finite");
  validate(spec, v.size());

  CompressionResult<Scalar> res;
  res.output = std::visit(
      [&v](const auto& c) -> Vector<Scalar> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Exact>) {
          return v;
        } else if constexpr (std::is_same_v<T, Rounding>) {
          return detail::round_to_grid<Scalar>(v, static_cast<Scalar>(c.delta));
        } else if constexpr (std::is_same_v<T, ScaledSign>) {
          return detail::scaled_sign<Scalar>(v);
        } else if constexpr (std::is_same_v<T, TopK>) {
          return detail::top_k<Scalar>(v, c.k);
        } else {
          return detail::eps_ball<Scalar>(v, static_cast<Scalar>(c.eps));
        }
      },
      spec);
  res.error_norm = (res.output - v).norm();
  return res;
}

/// Worst-case ||Q(v) - v|| over all v of dimension `dim` (Euclidean, unsquared).
/// std::nullopt means the compressor has no finite bound without a cap on
/// ||v||_inf; pass `v_inf_cap` to get one for TopK and ScaledSign.
inline std::optional<double> eps_bound(const CompressorSpec& spec, Eigen::Index dim,
                                       std::optional<double> v_inf_cap = std::nullopt) {
  if (dim < 1) throw ConfigError("eps_bound: dimension must be positive");
  const double d = static_cast<double>(dim);
  return std::visit(
      [&](const auto& c) -> std::optional<double> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Exact>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, Rounding>) {
          return std::sqrt(d) * c.delta / 2.0;
        } else if constexpr (std::is_same_v<T, EpsBall>) {
          return c.eps;
        } else if constexpr (std::is_same_v<T, TopK>) {
          if (!v_inf_cap) return std::nullopt;
          const double kept = std::min(static_cast<double>(c.k), d);
          return std::sqrt(d - kept) * *v_inf_cap;
        } else {
          // Entries of |v| lie in [0, cap]; their spread around the mean is at most cap/2.
          if (!v_inf_cap) return std::nullopt;
          return std::sqrt(d) * *v_inf_cap / 2.0;
        }
      },
      spec);
}

/// The squared-norm figure d * delta^2 / 4 often quoted for the rounding quantizer.
/// Informational only; eps_bound() is what the bound checks use.
inline double rounding_eps_squared(const Rounding& r, Eigen::Index dim) {
  return static_cast<double>(dim) * r.delta * r.delta / 4.0;
}

inline bool has_finite_bound(const CompressorSpec& spec) {
  return std::holds_alternative<Exact>(spec) || std::holds_alternative<Rounding>(spec) ||
         std::holds_alternative<EpsBall>(spec);
}

namespace detail {
inline std::uint64_t ceil_log2(std::uint64_t x) {
  std::uint64_t bits = 0;
  while ((std::uint64_t{1} << bits) < x && bits < 63) ++bits;
  return bits;
}
}  // namespace detail

/// Bits needed to transmit one compressed vector, for reporting only.
template <typename Derived>
std::uint64_t payload_bits(const CompressorSpec& spec, const Eigen::MatrixBase<Derived>& v) {
  const auto d = static_cast<std::uint64_t>(v.size());
  return std::visit(
      [&](const auto& c) -> std::uint64_t {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Rounding>) {
          const double levels = std::floor(static_cast<double>(v.template lpNorm<Eigen::Infinity>()) /
                                           c.delta);
          const auto l = static_cast<std::uint64_t>(std::min(levels, 9.0e15));
          return d * (1 + detail::ceil_log2(1 + l));
        } else if constexpr (std::is_same_v<T, ScaledSign>) {
          return d + 64;
        } else if constexpr (std::is_same_v<T, TopK>) {
          return static_cast<std::uint64_t>(c.k) * (64 + detail::ceil_log2(d));
        } else {
          return 64 * d;
        }
      },
      spec);
}

/// Parses `exact`, `rounding:D`, `sign`, `topk:K`, `epsball:E`.
CompressorSpec parse_compressor(const std::string& text);
std::string to_string(const CompressorSpec& spec);

}  // namespace ecgrad

#endif  // ECGRAD_COMPRESSORS_HPP
