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

#ifndef ECGRAD_THEORY_HPP
#define ECGRAD_THEORY_HPP

#include "ecgrad/core.hpp"
#include "ecgrad/problems.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ecgrad {

/// Everything a bound needs. kappa is derived as L / mu.
template <typename Scalar>
struct BoundInputs {
  Scalar mu{0};
  Scalar L{0};
  Scalar gamma{0};
  Scalar eps{0};
  Scalar sigma_sq{0};
  Scalar sigma_H_sq{0};
  Scalar beta{0.5};
  Scalar x0_dist{0};
  Scalar f0_gap{0};

  Scalar kappa() const {
    return mu > Scalar(0) ? L / mu : std::numeric_limits<Scalar>::infinity();
  }
};

/// values[j] is the bound at iteration ks[j]; `floor` is the k -> infinity limit.
template <typename Scalar>
struct BoundCurve {
  std::vector<std::uint64_t> ks;
  std::vector<Scalar> values;
  Scalar floor{0};
};

inline std::vector<std::uint64_t> iteration_grid(std::uint64_t last, std::uint64_t every = 1) {
  if (every == 0) every = 1;
  std::vector<std::uint64_t> ks;
  for (std::uint64_t k = 0; k <= last; k += every) ks.push_back(k);
  if (ks.back() != last) ks.push_back(last);
  return ks;
}

namespace detail {

template <typename Scalar>
bool same_step(Scalar a, Scalar b) {
  return std::abs(a - b) <= Scalar(1e-12) * std::max(std::abs(a), std::abs(b));
}

template <typename Scalar>
void require_positive_constants(const BoundInputs<Scalar>& in, bool need_mu) {
  if (!(in.L > Scalar(0))) throw ConfigError("bound: L must be positive");
  if (need_mu && !(in.mu > Scalar(0))) throw ConfigError("bound: mu must be positive");
  if (need_mu && in.mu > in.L) throw ConfigError("bound: mu must not exceed L");
  if (!(in.gamma > Scalar(0))) throw ConfigError("bound: gamma must be positive");
  if (in.eps < Scalar(0) || in.sigma_sq < Scalar(0) || in.sigma_H_sq < Scalar(0) ||
      in.x0_dist < Scalar(0) || in.f0_gap < Scalar(0))
    throw ConfigError("bound: negative input");
}

// Contraction factor of I - gamma H for the two admissible linear-rate steps.
template <typename Scalar>
Scalar linear_rate(const BoundInputs<Scalar>& in, bool allow_one_over_L) {
  const Scalar kappa = in.kappa();
  if (same_step(in.gamma, Scalar(2) / (in.mu + in.L))) return Scalar(1) - Scalar(2) / (kappa + Scalar(1));
  if (allow_one_over_L && same_step(in.gamma, Scalar(1) / in.L)) return Scalar(1) - Scalar(1) / kappa;
  throw ConfigError(allow_one_over_L ? "bound: gamma must be 1/L or 2/(mu+L)"
                                     : "bound: gamma must be 2/(mu+L)");
}

template <typename Scalar>
BoundCurve<Scalar> linear_curve(Scalar rho, Scalar x0_dist, Scalar floor,
                                const std::vector<std::uint64_t>& ks) {
  BoundCurve<Scalar> c{ks, {}, floor};
  c.values.reserve(ks.size());
  for (auto k : ks) c.values.push_back(std::pow(rho, static_cast<Scalar>(k)) * x0_dist + floor);
  return c;
}

template <typename Scalar>
BoundCurve<Scalar> sublinear_curve(Scalar lead, Scalar floor, const std::vector<std::uint64_t>& ks) {
  BoundCurve<Scalar> c{ks, {}, floor};
  c.values.reserve(ks.size());
  for (auto k : ks) c.values.push_back(lead / static_cast<Scalar>(k + 1) + floor);
  return c;
}

}  // namespace detail

/// Direct compressed GD on a quadratic: rho^k ||x0 - x*|| + eps / mu.
template <typename Scalar>
BoundCurve<Scalar> thm1_bound(const BoundInputs<Scalar>& in, const std::vector<std::uint64_t>& ks) {
  detail::require_positive_constants(in, true);
  return detail::linear_curve(detail::linear_rate(in, true), in.x0_dist, in.eps / in.mu, ks);
}

/// Error-compensated GD on a quadratic with A = I - gamma H: rho^k ||x0 - x*|| + gamma eps.
template <typename Scalar>
BoundCurve<Scalar> thm5_bound(const BoundInputs<Scalar>& in, const std::vector<std::uint64_t>& ks) {
  detail::require_positive_constants(in, true);
  return detail::linear_curve(detail::linear_rate(in, true), in.x0_dist, in.gamma * in.eps, ks);
}

/// Distributed direct compression, deterministic gradients, gamma = 2/(mu+L).
template <typename Scalar>
BoundCurve<Scalar> thm3_bound(const BoundInputs<Scalar>& in, const std::vector<std::uint64_t>& ks) {
  detail::require_positive_constants(in, true);
  return detail::linear_curve(detail::linear_rate(in, false), in.x0_dist, in.eps / in.mu, ks);
}

/// C = 1 + gamma L (kappa + 1).
template <typename Scalar>
Scalar thm6_constant(const BoundInputs<Scalar>& in) {
  return Scalar(1) + in.gamma * in.L * (in.kappa() + Scalar(1));
}

/// Distributed error compensation with exact Hessians, gamma = 2/(mu+L):
/// rho^k ||x0 - x*|| + gamma eps C.
template <typename Scalar>
BoundCurve<Scalar> thm6_bound(const BoundInputs<Scalar>& in, const std::vector<std::uint64_t>& ks) {
  detail::require_positive_constants(in, true);
  const Scalar rho = detail::linear_rate(in, false);
  return detail::linear_curve(rho, in.x0_dist, in.gamma * in.eps * thm6_constant(in), ks);
}

template <typename Scalar>
struct SublinearBounds {
  /// Bound on min_{l<=k} E||grad f(x^l)||^2.
  BoundCurve<Scalar> nonconvex;
  /// Bound on E f(xbar^k) - f*; absent when mu = 0.
  std::optional<BoundCurve<Scalar>> strongly_convex;
};

/// Distributed direct compression with stochastic gradients, gamma < 1/(3L).
template <typename Scalar>
SublinearBounds<Scalar> thm4_bounds(const BoundInputs<Scalar>& in,
                                    const std::vector<std::uint64_t>& ks) {
  detail::require_positive_constants(in, false);
  const Scalar g = in.gamma, L = in.L, e2 = in.eps * in.eps;
  if (!(g < Scalar(1) / (Scalar(3) * L))) throw ConfigError("thm4: requires gamma < 1/(3L)");
  const Scalar den = Scalar(1) - Scalar(3) * L * g;
  SublinearBounds<Scalar> out;
  out.nonconvex = detail::sublinear_curve(
      Scalar(2) / g / den * in.f0_gap,
      Scalar(3) * L * g * in.sigma_sq / den + (Scalar(1) + Scalar(3) * L * g) / den * e2, ks);
  if (in.mu > Scalar(0)) {
    out.strongly_convex = detail::sublinear_curve(
        Scalar(1) / (Scalar(2) * g) / den * in.x0_dist * in.x0_dist,
        Scalar(3) * g * in.sigma_sq / den +
            Scalar(0.5) * (Scalar(1) / in.mu + Scalar(3) * g) / den * e2,
        ks);
  }
  return out;
}

/// alpha_2 = L^2 + (2 + 6 L gamma)(sigma_H^2 + L^2).
template <typename Scalar>
Scalar thm7_alpha2(const BoundInputs<Scalar>& in) {
  return in.L * in.L +
         (Scalar(2) + Scalar(6) * in.L * in.gamma) * (in.sigma_H_sq + in.L * in.L);
}

/// alpha_1 = mu + L/beta + (4/mu + 6 gamma)(sigma_H^2 + L^2).
template <typename Scalar>
Scalar thm7_alpha1(const BoundInputs<Scalar>& in) {
  return in.mu + in.L / in.beta +
         (Scalar(4) / in.mu + Scalar(6) * in.gamma) * (in.sigma_H_sq + in.L * in.L);
}

/// Distributed error compensation with (stochastic) Hessian weighting.
/// Part a) needs gamma < 1/(3L); part b) additionally mu > 0, beta in (0,1)
/// and gamma < (1 - beta)/(3L). Part b) is omitted when mu = 0.
template <typename Scalar>
SublinearBounds<Scalar> thm7_bounds(const BoundInputs<Scalar>& in,
                                    const std::vector<std::uint64_t>& ks) {
  detail::require_positive_constants(in, false);
  const Scalar g = in.gamma, L = in.L, e2 = in.eps * in.eps;
  if (!(g < Scalar(1) / (Scalar(3) * L))) throw ConfigError("thm7a: requires gamma < 1/(3L)");
  const Scalar den = Scalar(1) - Scalar(3) * L * g;
  SublinearBounds<Scalar> out;
  out.nonconvex = detail::sublinear_curve(
      Scalar(2) / g / den * in.f0_gap,
      Scalar(3) * L * g * in.sigma_sq / den + thm7_alpha2(in) / den * g * g * e2, ks);
  if (in.mu > Scalar(0)) {
    if (!(in.beta > Scalar(0) && in.beta < Scalar(1)))
      throw ConfigError("thm7b: beta must lie in (0, 1)");
    if (!(g < (Scalar(1) - in.beta) / (Scalar(3) * L)))
      throw ConfigError("thm7b: requires gamma < (1 - beta)/(3L)");
    const Scalar den_b = Scalar(1) - in.beta - Scalar(3) * L * g;
    out.strongly_convex = detail::sublinear_curve(
        Scalar(1) / (Scalar(2) * g) / den_b * in.x0_dist * in.x0_dist,
        Scalar(1.5) * g * in.sigma_sq / den_b + Scalar(0.5) * thm7_alpha1(in) / den_b * g * g * e2,
        ks);
  }
  return out;
}

// -----------------------------------------------------------------------------
// Scalar worst case for direct compression: f(x) = mu/2 x^2 with the radial
// eps-compressor gives |x^k| = (1 - mu gamma)^k (|x^0| - eps/mu) + eps/mu.
// -----------------------------------------------------------------------------

template <typename Scalar>
struct LowerBoundPoint {
  Scalar value{0};      // |x^k - x*|
  Scalar floor{0};      // eps / mu
  Scalar gap_floor{0};  // eps^2 / (2 mu)
};

template <typename Scalar>
LowerBoundPoint<Scalar> scalar_worst_case(Scalar mu, Scalar gamma, Scalar eps, Scalar x0_abs,
                                            std::uint64_t k) {
  if (!(mu > Scalar(0))) throw ConfigError("lower bound: mu must be positive");
  if (!(gamma > Scalar(0) && gamma <= Scalar(1) / mu))
    throw ConfigError("lower bound: gamma must lie in (0, 1/mu]");
  if (!(eps > Scalar(0))) throw ConfigError("lower bound: eps must be positive");
  if (!(x0_abs > eps && x0_abs > eps / mu))
    throw ConfigError("lower bound: |x0| must exceed both eps and eps/mu");
  const Scalar floor = eps / mu;
  const Scalar decay = std::pow(Scalar(1) - mu * gamma, static_cast<Scalar>(k));
  return {decay * (x0_abs - floor) + floor, floor, eps * eps / (Scalar(2) * mu)};
}

// -----------------------------------------------------------------------------
// Step-size rules and theorem admissibility.
// -----------------------------------------------------------------------------

struct StepRule {
  enum class Kind { OneOverL, TwoOverMuPlusL, ScaledOverL, Thm4, Thm7b, PaperLs, PaperRobust, Fixed };
  Kind kind = Kind::OneOverL;
  /// c in c/L, beta for Thm7b, or the literal step for Fixed.
  double param = 0.0;
};

/// Parses `1/L`, `2/(mu+L)`, `C/L`, `thm4`, `thm7b:BETA`, `paper-ls`,
/// `paper-robust`, or a plain number.
StepRule parse_step_rule(const std::string& text);
std::string to_string(const StepRule& rule);

/// The step a rule prescribes for the given constants. `thm4` returns 1/(6L)
/// and `thm7b:beta` returns (1-beta)/(6L): half their admissibility limits.
template <typename Scalar>
Scalar validate_step(const StepRule& rule, const Constants<Scalar>& c) {
  if (!(c.L > Scalar(0))) throw ConfigError("step rule: L must be positive");
  const auto p = static_cast<Scalar>(rule.param);
  switch (rule.kind) {
    case StepRule::Kind::OneOverL:
      return Scalar(1) / c.L;
    case StepRule::Kind::TwoOverMuPlusL:
      if (!(c.mu > Scalar(0))) throw ConfigError("step rule 2/(mu+L): requires mu > 0");
      return Scalar(2) / (c.mu + c.L);
    case StepRule::Kind::ScaledOverL:
      if (!(p > Scalar(0))) throw ConfigError("step rule c/L: c must be positive");
      return p / c.L;
    case StepRule::Kind::Thm4:
      return Scalar(1) / (Scalar(6) * c.L);
    case StepRule::Kind::Thm7b:
      if (!(p > Scalar(0) && p < Scalar(1))) throw ConfigError("step rule thm7b: beta must lie in (0, 1)");
      return (Scalar(1) - p) / (Scalar(6) * c.L);
    case StepRule::Kind::PaperLs:
      return Scalar(0.1) / c.L;
    case StepRule::Kind::PaperRobust: {
      const Scalar Lp = c.L_step_rule ? *c.L_step_rule : c.L;
      return Scalar(1) / (Scalar(60) * std::sqrt(Scalar(3)) * Lp);
    }
    case StepRule::Kind::Fixed:
      if (!(p > Scalar(0))) throw ConfigError("step rule: gamma must be positive");
      return p;
  }
  throw ConfigError("step rule: unknown kind");
}

enum class Theorem { Thm1, Thm3, Thm4, Thm5, Thm6, Thm7a, Thm7b };

Theorem parse_theorem(const std::string& text);
std::string to_string(Theorem t);

/// Throws ConfigError("step-size rule violated ...") when gamma is outside the
/// theorem's hypotheses.
template <typename Scalar>
void check_step_for(Theorem t, Scalar gamma, const Constants<Scalar>& c, Scalar beta = Scalar(0.5)) {
  auto fail = [&](const std::string& why) {
    throw ConfigError("step-size rule violated for " + to_string(t) + ": " + why);
  };
  const Scalar L = c.L, mu = c.mu;
  switch (t) {
    case Theorem::Thm1:
    case Theorem::Thm5:
      if (!(mu > Scalar(0))) fail("requires mu > 0");
      if (!detail::same_step(gamma, Scalar(1) / L) && !detail::same_step(gamma, Scalar(2) / (mu + L)))
        fail("gamma must be 1/L or 2/(mu+L)");
      return;
    case Theorem::Thm3:
    case Theorem::Thm6:
      if (!(mu > Scalar(0))) fail("requires mu > 0");
      if (!detail::same_step(gamma, Scalar(2) / (mu + L))) fail("gamma must be 2/(mu+L)");
      return;
    case Theorem::Thm4:
    case Theorem::Thm7a:
      if (!(gamma < Scalar(1) / (Scalar(3) * L))) fail("gamma must be < 1/(3L)");
      return;
    case Theorem::Thm7b:
      if (!(mu > Scalar(0))) fail("requires mu > 0");
      if (!(beta > Scalar(0) && beta < Scalar(1))) fail("beta must lie in (0, 1)");
      if (!(gamma < (Scalar(1) - beta) / (Scalar(3) * L))) fail("gamma must be < (1-beta)/(3L)");
      return;
  }
}

}  // namespace ecgrad

#endif  // ECGRAD_THEORY_HPP
