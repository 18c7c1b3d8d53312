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

#ifndef ECGRAD_SCHEMES_HPP
#define ECGRAD_SCHEMES_HPP

#include "ecgrad/compressors.hpp"
#include "ecgrad/parallel.hpp"
#include "ecgrad/problems.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ecgrad {

enum class SchemeKind { Direct, ErrorCompensated };

/// How the error memory is weighted before it is added to the gradient:
/// p_i = g_i + A_i e_i with A_i = I, alpha I, I - gamma H_i, I - gamma diag(H_i)
/// or I - gamma B_i (B_i a per-worker BFGS approximation of H_i).
enum class Weighting { Identity, Scaled, Hessian, DiagHessian, Bfgs };

struct SchemeConfig {
  SchemeKind kind = SchemeKind::Direct;
  Weighting weighting = Weighting::Identity;
  double alpha = 1.0;
  double gamma = 0.0;

  bool error_compensated() const { return kind == SchemeKind::ErrorCompensated; }
};

inline void validate(const SchemeConfig& s) {
  if (!(s.gamma > 0.0) || !std::isfinite(s.gamma))
    throw ConfigError("scheme: step size gamma must be positive");
  if (s.error_compensated() && s.weighting == Weighting::Scaled &&
      !(s.alpha > 0.0 && s.alpha <= 1.0))
    throw ConfigError("scheme: alpha must lie in (0, 1]");
}

/// Parses `direct`, `ec:identity`, `ec:scaled:A`, `ec:hessian`, `ec:diag`, `ec:bfgs`.
/// The returned config has gamma = 0; the caller fills it in.
SchemeConfig parse_scheme(const std::string& text);
std::string to_string(const SchemeConfig& scheme);

/// Deterministic full gradients when empty.
using Oracle = std::optional<StochasticOracleConfig>;

template <typename Scalar>
struct BfgsState {
  Matrix<Scalar> B;
  std::optional<Vector<Scalar>> prev_x;
  std::optional<Vector<Scalar>> prev_grad;
};

template <typename Scalar>
struct WorkerState {
  Vector<Scalar> error_memory;
  std::optional<BfgsState<Scalar>> bfgs;
  std::uint64_t rng_stream_id = 0;
};

/// Fresh workers with e_i = 0; BFGS state starts at B = L * I when requested.
template <typename Scalar>
std::vector<WorkerState<Scalar>> make_workers(std::size_t n, Eigen::Index dim,
                                              const SchemeConfig& scheme, Scalar L) {
  std::vector<WorkerState<Scalar>> ws(n);
  for (std::size_t i = 0; i < n; ++i) {
    ws[i].error_memory = Vector<Scalar>::Zero(dim);
    ws[i].rng_stream_id = i;
    if (scheme.error_compensated() && scheme.weighting == Weighting::Bfgs)
      ws[i].bfgs = BfgsState<Scalar>{L * Matrix<Scalar>::Identity(dim, dim), {}, {}};
  }
  return ws;
}

/// Standard BFGS secant update with s = x_new - prev_x, y = grad_new - prev_grad.
/// The first call only records the point; pairs with s'y <= 1e-10 |s||y| are skipped.
template <typename Scalar>
void bfgs_update(BfgsState<Scalar>& state, const Vector<Scalar>& x_new,
                 const Vector<Scalar>& grad_new) {
  if (state.prev_x && state.prev_grad) {
    const Vector<Scalar> s = x_new - *state.prev_x;
    const Vector<Scalar> y = grad_new - *state.prev_grad;
    const Scalar sy = s.dot(y);
    if (sy > Scalar(1e-10) * s.norm() * y.norm()) {
      const Vector<Scalar> Bs = state.B * s;
      const Scalar sBs = s.dot(Bs);
      if (sBs > Scalar(0)) {
        state.B.noalias() -= Bs * Bs.transpose() / sBs;
        state.B.noalias() += y * y.transpose() / sy;
        state.B = Scalar(0.5) * (state.B + state.B.transpose()).eval();
      }
    }
  }
  state.prev_x = x_new;
  state.prev_grad = grad_new;
}

template <typename Scalar>
struct StepReport {
  Vector<Scalar> x_next;
  std::vector<Vector<Scalar>> payloads;
  std::vector<Scalar> error_norms;
  /// c^k = (1/n) sum_i (g_i - q_i): gradient minus what was actually applied.
  Vector<Scalar> gradient_error;
  /// (1/n) sum_i g_i: the full gradient at x when gradients are deterministic.
  Vector<Scalar> mean_gradient;
  std::uint64_t bits = 0;
};

namespace detail {

template <typename Scalar>
Vector<Scalar> local_gradient(const Problem<Scalar>& p, std::size_t i, const Vector<Scalar>& x,
                              const Oracle& oracle, std::uint64_t iteration) {
  if (!oracle) return grad(p, i, x);
  return stochastic_grad(p, i, x, *oracle, iteration);
}

// A_i e for the configured weighting.
template <typename Scalar>
Vector<Scalar> weighted_memory(const Problem<Scalar>& p, std::size_t i, const Vector<Scalar>& x,
                               const WorkerState<Scalar>& w, const SchemeConfig& scheme,
                               const Oracle& oracle, std::uint64_t iteration) {
  const Vector<Scalar>& e = w.error_memory;
  const auto gamma = static_cast<Scalar>(scheme.gamma);
  const Batch batch = oracle ? hessian_batch(p, i, *oracle, iteration) : Batch{};
  switch (scheme.weighting) {
    case Weighting::Identity:
      return e;
    case Weighting::Scaled:
      return static_cast<Scalar>(scheme.alpha) * e;
    case Weighting::Hessian:
      return e - gamma * hessian_vector(p, i, x, e, batch);
    case Weighting::DiagHessian:
      return e - gamma * hessian_diagonal(p, i, x, batch).cwiseProduct(e);
    case Weighting::Bfgs:
      if (!w.bfgs) throw ConfigError("ec:bfgs: worker has no BFGS state");
      return e - gamma * (w.bfgs->B * e);
  }
  return e;
}

template <typename Scalar>
struct WorkerOutput {
  Vector<Scalar> gradient;
  Vector<Scalar> payload;
  Scalar error_norm{0};
  std::uint64_t bits = 0;
};

// Serial reduction in ascending worker order.
template <typename Scalar>
StepReport<Scalar> aggregate(const Vector<Scalar>& x, Scalar gamma,
                             std::vector<WorkerOutput<Scalar>>& out) {
  StepReport<Scalar> rep;
  const auto n = static_cast<Scalar>(out.size());
  Vector<Scalar> sum_q = Vector<Scalar>::Zero(x.size());
  Vector<Scalar> sum_c = Vector<Scalar>::Zero(x.size());
  Vector<Scalar> sum_g = Vector<Scalar>::Zero(x.size());
  for (auto& o : out) {
    sum_q += o.payload;
    sum_g += o.gradient;
    sum_c += o.gradient - o.payload;
    rep.error_norms.push_back(o.error_norm);
    rep.bits += o.bits;
  }
  rep.x_next = x - gamma * (sum_q / n);
  rep.gradient_error = sum_c / n;
  rep.mean_gradient = sum_g / n;
  rep.payloads.reserve(out.size());
  for (auto& o : out) rep.payloads.push_back(std::move(o.payload));
  return rep;
}

}  // namespace detail

/// x+ = x - gamma (1/n) sum_i Q(g_i(x)). Worker memories are not touched.
template <typename Scalar>
StepReport<Scalar> direct_step(const Vector<Scalar>& x,
                               const std::vector<WorkerState<Scalar>>& workers,
                               const Problem<Scalar>& problem, const CompressorSpec& compressor,
                               Scalar gamma, const Oracle& oracle = {},
                               std::uint64_t iteration = 0, std::size_t threads = 1) {
  require_dim(x.size(), dim(problem), "direct_step x");
  if (workers.size() != ecgrad::workers(problem))
    throw ConfigError("direct_step: worker count does not match the problem");
  validate(compressor, x.size());
  std::vector<detail::WorkerOutput<Scalar>> out(workers.size());
  for_each_worker(workers.size(), threads, [&](std::size_t i) {
    auto& o = out[i];
    o.gradient = detail::local_gradient(problem, i, x, oracle, iteration);
    auto r = compress(compressor, o.gradient);
    o.bits = payload_bits(compressor, o.gradient);
    o.payload = std::move(r.output);
    o.error_norm = r.error_norm;
  });
  return detail::aggregate(x, gamma, out);
}

/// One round of error-compensated compression:
///   p_i = g_i + A_i e_i,  q_i = Q(p_i),  e_i <- p_i - q_i,  x+ = x - gamma (1/n) sum_i q_i.
/// BFGS weightings use B_i built from iterations before this one; the new
/// (x, g_i) pair is folded in after the step.
template <typename Scalar>
StepReport<Scalar> ec_step(const Vector<Scalar>& x, std::vector<WorkerState<Scalar>>& workers,
                           const Problem<Scalar>& problem, const CompressorSpec& compressor,
                           const SchemeConfig& scheme, const Oracle& oracle = {},
                           std::uint64_t iteration = 0, std::size_t threads = 1) {
  if (!scheme.error_compensated()) throw ConfigError("ec_step: scheme is not error-compensated");
  validate(scheme);
  require_dim(x.size(), dim(problem), "ec_step x");
  if (workers.size() != ecgrad::workers(problem))
    throw ConfigError("ec_step: worker count does not match the problem");
  validate(compressor, x.size());
  const auto gamma = static_cast<Scalar>(scheme.gamma);

  std::vector<detail::WorkerOutput<Scalar>> out(workers.size());
  for_each_worker(workers.size(), threads, [&](std::size_t i) {
    auto& w = workers[i];
    require_dim(w.error_memory.size(), x.size(), "ec_step error memory");
    auto& o = out[i];
    o.gradient = detail::local_gradient(problem, i, x, oracle, iteration);
    const Vector<Scalar> p =
        o.gradient + detail::weighted_memory(problem, i, x, w, scheme, oracle, iteration);
    auto r = compress(compressor, p);
    o.bits = payload_bits(compressor, p);
    w.error_memory = p - r.output;
    o.payload = std::move(r.output);
    o.error_norm = r.error_norm;
    if (w.bfgs) bfgs_update(*w.bfgs, x, o.gradient);
  });
  return detail::aggregate(x, gamma, out);
}

/// Dispatches to direct_step or ec_step.
template <typename Scalar>
StepReport<Scalar> step(const Vector<Scalar>& x, std::vector<WorkerState<Scalar>>& workers,
                        const Problem<Scalar>& problem, const CompressorSpec& compressor,
                        const SchemeConfig& scheme, const Oracle& oracle = {},
                        std::uint64_t iteration = 0, std::size_t threads = 1) {
  if (scheme.error_compensated())
    return ec_step(x, workers, problem, compressor, scheme, oracle, iteration, threads);
  validate(scheme);
  return direct_step(x, workers, problem, compressor, static_cast<Scalar>(scheme.gamma), oracle,
                     iteration, threads);
}

// -----------------------------------------------------------------------------
// Accumulated compression error on quadratics (deterministic gradients).
// -----------------------------------------------------------------------------

/// One recorded iterate: x^k, the (worker-averaged) memory e^k and c^k.
template <typename Scalar>
struct EcRecord {
  Vector<Scalar> x;
  Vector<Scalar> e;
  Vector<Scalar> c;
};

/// r^k = (x^k - x*) - A^k (x^0 - x*) - gamma e^k with A = I - gamma H.
/// Zero (up to rounding) for Hessian weighting; for other weightings it equals
/// the error accumulated through the recursion.
template <typename Scalar>
std::vector<Vector<Scalar>> ec_identity_residuals(const std::vector<EcRecord<Scalar>>& trace,
                                                  const QuadraticProblem<Scalar>& problem,
                                                  Scalar gamma) {
  std::vector<Vector<Scalar>> r;
  if (trace.empty()) return r;
  const Matrix<Scalar> A =
      Matrix<Scalar>::Identity(problem.dim(), problem.dim()) - gamma * problem.H();
  Vector<Scalar> transient = trace.front().x - problem.x_star();
  r.reserve(trace.size());
  for (const auto& rec : trace) {
    r.push_back((rec.x - problem.x_star()) - transient - gamma * rec.e);
    transient = A * transient;
  }
  return r;
}

/// Accumulated term gamma * sum_{l<k} A^{k-1-l} (A - W) e^l, built by the
/// recursion S^{k+1} = A S^k + gamma (A - W) e^k with W the weighting matrix.
/// For Scaled(alpha), A - W = (1 - alpha) I - gamma H.
template <typename Scalar>
std::vector<Vector<Scalar>> accumulation_terms(const std::vector<EcRecord<Scalar>>& trace,
                                               const QuadraticProblem<Scalar>& problem,
                                               Scalar gamma, Weighting weighting,
                                               Scalar alpha = Scalar(1)) {
  const Eigen::Index d = problem.dim();
  const Matrix<Scalar> I = Matrix<Scalar>::Identity(d, d);
  const Matrix<Scalar> A = I - gamma * problem.H();
  Matrix<Scalar> W;
  switch (weighting) {
    case Weighting::Identity:
      W = I;
      break;
    case Weighting::Scaled:
      W = alpha * I;
      break;
    case Weighting::Hessian:
      W = A;
      break;
    case Weighting::DiagHessian:
      W = I;
      W.diagonal() -= gamma * problem.H().diagonal();
      break;
    case Weighting::Bfgs:
      throw ConfigError("accumulation: BFGS weighting varies per step and is not supported");
  }
  const Matrix<Scalar> B = A - W;
  std::vector<Vector<Scalar>> out;
  out.reserve(trace.size());
  Vector<Scalar> S = Vector<Scalar>::Zero(d);
  for (const auto& rec : trace) {
    out.push_back(S);
    S = A * S + gamma * (B * rec.e);
  }
  return out;
}

/// Per-iteration norm of the accumulation diagnostic: the identity residual
/// for Hessian weighting, the recursively accumulated term otherwise.
template <typename Scalar>
std::vector<Scalar> accumulation_diagnostic(const std::vector<EcRecord<Scalar>>& trace,
                                            const Problem<Scalar>& problem, Scalar gamma,
                                            Weighting weighting, Scalar alpha = Scalar(1)) {
  const auto* q = as_quadratic(problem);
  if (q == nullptr) throw ConfigError("accumulation_diagnostic: requires a quadratic problem");
  const auto terms = weighting == Weighting::Hessian
                         ? ec_identity_residuals(trace, *q, gamma)
                         : accumulation_terms(trace, *q, gamma, weighting, alpha);
  std::vector<Scalar> norms;
  norms.reserve(terms.size());
  for (const auto& t : terms) norms.push_back(t.norm());
  return norms;
}

}  // namespace ecgrad

#endif  // ECGRAD_SCHEMES_HPP
