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

#ifndef ECGRAD_SIMULATION_HPP
#define ECGRAD_SIMULATION_HPP

#include "ecgrad/compressors.hpp"
#include "ecgrad/core.hpp"
#include "ecgrad/parallel.hpp"
#include "ecgrad/problems.hpp"
#include "ecgrad/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ecgrad {

inline constexpr double kDivergenceNorm = 1e12;

template <typename Scalar>
struct RunConfig {
  std::shared_ptr<const Problem<Scalar>> problem;
  CompressorSpec compressor = Exact{};
  SchemeConfig scheme;
  std::size_t n_workers = 1;
  std::uint64_t iterations = 1;
  /// Deterministic full gradients when empty.
  Oracle oracle;
  /// Zero when empty.
  std::optional<Vector<Scalar>> x0;
  /// Overrides oracle->seed.
  std::uint64_t seed = 0;
  std::uint64_t metrics_every = 1;
  std::size_t threads = 1;
  /// Reuse a known optimum instead of recomputing it per run.
  std::optional<Optimum<Scalar>> known_optimum;
  /// Keep (x^k, mean e^k, c^k) for every iteration.
  bool keep_records = false;
};

/// One recorded iteration. Optional fields are empty when the metric does not
/// apply to the run.
template <typename Scalar>
struct TraceRow {
  std::uint64_t k = 0;
  std::optional<Scalar> dist;
  std::optional<Scalar> gap;
  Scalar gradsq{0};
  Scalar mingradsq{0};
  std::optional<Scalar> avg_gap;
  Scalar errnorm{0};
  std::optional<Scalar> accres;
  std::uint64_t bits = 0;
};

template <typename Scalar>
struct RunTrace {
  std::vector<TraceRow<Scalar>> rows;
  Vector<Scalar> x_final;
  std::vector<EcRecord<Scalar>> records;
};

enum class Metric { Dist, Gap, GradSq, MinGradSq, AvgGap, ErrNorm, AccRes };

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::Dist: return "dist";
    case Metric::Gap: return "gap";
    case Metric::GradSq: return "gradsq";
    case Metric::MinGradSq: return "mingradsq";
    case Metric::AvgGap: return "avg_gap";
    case Metric::ErrNorm: return "errnorm";
    case Metric::AccRes: return "accres";
  }
  return "?";
}

template <typename Scalar>
std::optional<Scalar> metric_value(const TraceRow<Scalar>& r, Metric m) {
  switch (m) {
    case Metric::Dist: return r.dist;
    case Metric::Gap: return r.gap;
    case Metric::GradSq: return r.gradsq;
    case Metric::MinGradSq: return r.mingradsq;
    case Metric::AvgGap: return r.avg_gap;
    case Metric::ErrNorm: return r.errnorm;
    case Metric::AccRes: return r.accres;
  }
  return std::nullopt;
}

template <typename Scalar>
void validate(const RunConfig<Scalar>& cfg) {
  if (!cfg.problem) throw ConfigError("run: no problem");
  if (cfg.iterations < 1) throw ConfigError("run: iterations must be at least 1");
  if (cfg.metrics_every < 1) throw ConfigError("run: metrics_every must be positive");
  if (cfg.n_workers != workers(*cfg.problem))
    throw ConfigError("run: n_workers=" + std::to_string(cfg.n_workers) +
                      " does not match the problem's " + std::to_string(workers(*cfg.problem)) +
                      " shards");
  if (cfg.x0) require_dim(cfg.x0->size(), dim(*cfg.problem), "run x0");
  validate(cfg.compressor, dim(*cfg.problem));
  validate(cfg.scheme);
}

/// Runs the synchronous master/worker loop for cfg.iterations rounds, starting
/// from zero error memories. Rows are recorded every metrics_every iterations
/// and at the last one; min_grad_norm_sq covers every iterate, recorded or not.
/// Throws DivergedError when an iterate is non-finite or exceeds 1e12 in norm.
template <typename Scalar>
RunTrace<Scalar> run(const RunConfig<Scalar>& cfg) {
  validate(cfg);
  const Problem<Scalar>& p = *cfg.problem;
  const Eigen::Index d = dim(p);

  Oracle oracle = cfg.oracle;
  if (oracle) oracle->seed = cfg.seed;

  std::optional<Optimum<Scalar>> opt = cfg.known_optimum;
  if (!opt) opt = optimum(p);

  const auto c = constants(p);
  auto workers = make_workers<Scalar>(cfg.n_workers, d, cfg.scheme, c.L);

  Vector<Scalar> x = cfg.x0 ? *cfg.x0 : Vector<Scalar>::Zero(d);
  Vector<Scalar> x_sum = Vector<Scalar>::Zero(d);

  const auto* quad = as_quadratic(p);
  const bool track_accres = quad != nullptr && cfg.scheme.error_compensated() &&
                            cfg.scheme.weighting == Weighting::Hessian && !oracle;
  const auto gamma = static_cast<Scalar>(cfg.scheme.gamma);
  Vector<Scalar> transient;
  if (track_accres) transient = x - quad->x_star();

  RunTrace<Scalar> trace;
  Scalar min_gradsq = std::numeric_limits<Scalar>::infinity();
  std::uint64_t bits = 0;

  auto mean_memory = [&]() {
    Vector<Scalar> e = Vector<Scalar>::Zero(d);
    for (const auto& w : workers) e += w.error_memory;
    return Vector<Scalar>(e / static_cast<Scalar>(workers.size()));
  };

  for (std::uint64_t k = 0;; ++k) {
    x_sum += x;
    const bool last = k == cfg.iterations;
    const bool record = last || k % cfg.metrics_every == 0;

    Vector<Scalar> e;
    Scalar errnorm(0);
    if (record || cfg.keep_records) {
      e = mean_memory();
      for (const auto& w : workers) errnorm += w.error_memory.norm();
      errnorm /= static_cast<Scalar>(workers.size());
    }

    std::optional<StepReport<Scalar>> rep;
    if (!last) rep = step(x, workers, p, cfg.compressor, cfg.scheme, oracle, k, cfg.threads);

    const Vector<Scalar> g = (rep && !oracle) ? rep->mean_gradient : grad(p, x);
    const Scalar gradsq = g.squaredNorm();
    min_gradsq = std::min(min_gradsq, gradsq);

    if (cfg.keep_records)
      trace.records.push_back({x, e, rep ? rep->gradient_error : Vector<Scalar>::Zero(d)});
    if (record) {
      TraceRow<Scalar> row;
      row.k = k;
      row.gradsq = gradsq;
      row.mingradsq = min_gradsq;
      row.errnorm = errnorm;
      row.bits = bits;
      if (opt) {
        row.dist = (x - opt->x_star).norm();
        row.gap = value(p, x) - opt->f_star;
        const Vector<Scalar> x_avg = x_sum / static_cast<Scalar>(k + 1);
        row.avg_gap = value(p, x_avg) - opt->f_star;
      }
      if (track_accres) row.accres = ((x - quad->x_star()) - transient - gamma * e).norm();
      trace.rows.push_back(row);
    }
    if (last) break;

    if (track_accres) transient -= gamma * (quad->H() * transient);
    bits += rep->bits;
    x = std::move(rep->x_next);
    if (!x.allFinite() || x.norm() > static_cast<Scalar>(kDivergenceNorm))
      throw DivergedError("run diverged at iteration " + std::to_string(k + 1), k + 1);
  }
  trace.x_final = x;
  return trace;
}

/// Mean of `metric` over the final `tail_fraction` of recorded rows (at least one row).
template <typename Scalar>
Scalar empirical_floor(const RunTrace<Scalar>& trace, double tail_fraction = 0.1,
                       Metric metric = Metric::Dist) {
  if (trace.rows.empty()) throw DomainError("empirical_floor: empty trace");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw ConfigError("empirical_floor: tail_fraction must lie in (0, 1]");
  const auto n = trace.rows.size();
  auto tail = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n)));
  tail = std::clamp<std::size_t>(tail, 1, n);
  Scalar acc(0);
  for (std::size_t j = n - tail; j < n; ++j) {
    const auto v = metric_value(trace.rows[j], metric);
    if (!v) throw DomainError(std::string("empirical_floor: metric ") + to_string(metric) +
                              " not recorded");
    acc += *v;
  }
  return acc / static_cast<Scalar>(tail);
}

template <typename Scalar>
struct CompareEntry {
  std::string name;
  RunTrace<Scalar> trace;
  std::optional<Scalar> dist_floor;
  std::optional<Scalar> gap_floor;
  Scalar mingradsq_final{0};
};

template <typename Scalar>
struct CompareTable {
  std::vector<CompareEntry<Scalar>> entries;
  /// ratio[i][j] = floor_i / floor_j on `metric`.
  Metric metric = Metric::Dist;
  std::vector<std::vector<Scalar>> ratio;
};

/// Runs every config against `problem` with the seed of the first config and
/// tabulates floors (mean of the last 10% of rows) and pairwise floor ratios.
/// The ratio metric is dist when every run has it, else gap, else mingradsq.
template <typename Scalar>
CompareTable<Scalar> compare(std::vector<RunConfig<Scalar>> configs,
                             const std::shared_ptr<const Problem<Scalar>>& problem,
                             const std::vector<std::string>& names = {}) {
  if (configs.empty()) throw ConfigError("compare: no configs");
  if (!problem) throw ConfigError("compare: no problem");
  const auto known = optimum(*problem);
  CompareTable<Scalar> table;
  for (std::size_t j = 0; j < configs.size(); ++j) {
    auto& cfg = configs[j];
    if (cfg.problem && dim(*cfg.problem) != dim(*problem))
      throw DomainError("compare: config " + std::to_string(j) + " has mismatched dimension");
    if (cfg.x0) require_dim(cfg.x0->size(), dim(*problem), "compare x0");
    cfg.problem = problem;
    cfg.seed = configs.front().seed;
    if (known) cfg.known_optimum = known;
    CompareEntry<Scalar> e;
    e.name = j < names.size() ? names[j] : to_string(cfg.scheme);
    e.trace = run(cfg);
    if (e.trace.rows.back().dist) e.dist_floor = empirical_floor(e.trace, 0.1, Metric::Dist);
    if (e.trace.rows.back().gap) e.gap_floor = empirical_floor(e.trace, 0.1, Metric::Gap);
    e.mingradsq_final = e.trace.rows.back().mingradsq;
    table.entries.push_back(std::move(e));
  }
  const bool all_dist = std::all_of(table.entries.begin(), table.entries.end(),
                                    [](const auto& e) { return e.dist_floor.has_value(); });
  const bool all_gap = std::all_of(table.entries.begin(), table.entries.end(),
                                   [](const auto& e) { return e.gap_floor.has_value(); });
  table.metric = all_dist ? Metric::Dist : all_gap ? Metric::Gap : Metric::MinGradSq;
  auto floor_of = [&](const CompareEntry<Scalar>& e) {
    if (table.metric == Metric::Dist) return *e.dist_floor;
    if (table.metric == Metric::Gap) return *e.gap_floor;
    return e.mingradsq_final;
  };
  const auto n = table.entries.size();
  table.ratio.assign(n, std::vector<Scalar>(n, Scalar(1)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      table.ratio[i][j] = floor_of(table.entries[i]) / floor_of(table.entries[j]);
  return table;
}

namespace detail {

template <typename Scalar>
void put_number(std::ostream& os, Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(v));
  os << buf;
}

template <typename Scalar>
void put_optional(std::ostream& os, const std::optional<Scalar>& v) {
  if (v) put_number(os, *v);
}

}  // namespace detail

inline constexpr const char* kTraceHeader = "k,dist,gap,gradsq,mingradsq,avg_gap,errnorm,accres,bits";

template <typename Scalar>
void write_trace_csv(std::ostream& os, const RunTrace<Scalar>& trace) {
  os << kTraceHeader << '\n';
  for (const auto& r : trace.rows) {
    os << r.k << ',';
    detail::put_optional(os, r.dist);
    os << ',';
    detail::put_optional(os, r.gap);
    os << ',';
    detail::put_number(os, r.gradsq);
    os << ',';
    detail::put_number(os, r.mingradsq);
    os << ',';
    detail::put_optional(os, r.avg_gap);
    os << ',';
    detail::put_number(os, r.errnorm);
    os << ',';
    detail::put_optional(os, r.accres);
    os << ',' << r.bits << '\n';
  }
}

}  // namespace ecgrad

#endif  // ECGRAD_SIMULATION_HPP
