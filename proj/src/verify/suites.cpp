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

#include "ecgrad/verify.hpp"

#include "ecgrad/compressors.hpp"
#include "ecgrad/data_io.hpp"
#include "ecgrad/problems.hpp"
#include "ecgrad/schemes.hpp"
#include "ecgrad/simulation.hpp"
#include "ecgrad/theory.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <sstream>

namespace ecgrad {
namespace {

using Clock = std::chrono::steady_clock;
using ProblemPtr = std::shared_ptr<const Problem<double>>;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

CheckResult check(const std::string& suite, const std::string& name, bool pass, double value,
                  double threshold, std::string detail, Clock::time_point t0) {
  return {suite, name, pass, value, threshold, std::move(detail), seconds_since(t0)};
}

ProblemPtr make_quadratic(Eigen::Index d, double kappa, std::uint64_t seed) {
  auto in = synth_quadratic<double>({d, kappa, seed});
  return std::make_shared<const Problem<double>>(QuadraticProblem<double>(in.H, in.b, 1));
}

ProblemPtr make_erm(const Dataset<double>& data, std::size_t workers, Loss loss, double lambda) {
  return std::make_shared<const Problem<double>>(
      ErmProblem<double>(make_shards(data, workers, loss), loss, lambda));
}

SchemeConfig scheme_of(const std::string& text, double gamma) {
  auto s = parse_scheme(text);
  s.gamma = gamma;
  return s;
}

RunConfig<double> base_config(const ProblemPtr& p, const CompressorSpec& c, const SchemeConfig& s,
                              std::uint64_t iters, const VerifyOptions& opt) {
  RunConfig<double> cfg;
  cfg.problem = p;
  cfg.compressor = c;
  cfg.scheme = s;
  cfg.n_workers = workers(*p);
  cfg.iterations = iters;
  cfg.threads = opt.threads;
  return cfg;
}

// A random SPD problem of the family shared by the linear-rate suites.
struct FamilyMember {
  ProblemPtr problem;
  Vector<double> x0;
};

FamilyMember family_member(int index) {
  std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(index));
  std::uniform_int_distribution<int> dim(1, 50);
  std::uniform_real_distribution<double> log_kappa(0.0, 3.0);
  const int d = dim(rng);
  const double kappa = std::pow(10.0, log_kappa(rng));
  FamilyMember m;
  m.problem = make_quadratic(d, kappa, rng());
  m.x0 = standard_normal_matrix<double>(d, 1, rng);
  return m;
}

std::vector<CompressorSpec> all_compressors(Eigen::Index d) {
  return {Exact{}, Rounding{0.1}, ScaledSign{}, TopK{static_cast<std::size_t>(std::max<Eigen::Index>(1, d / 4))},
          EpsBall{0.1}};
}

// --- 1 ----------------------------------------------------------------------

std::vector<CheckResult> suite_quadratic_identity(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_at;
  for (int j = 0; j < 100; ++j) {
    const auto m = family_member(j);
    const auto c = constants(*m.problem);
    const auto& q = *as_quadratic(*m.problem);
    const double dist0 = (m.x0 - q.x_star()).norm();
    for (const auto& comp : all_compressors(q.dim())) {
      for (double gamma : {1.0 / c.L, 2.0 / (c.mu + c.L)}) {
        auto cfg = base_config(m.problem, comp, scheme_of("ec:hessian", gamma), 200, opt);
        cfg.x0 = m.x0;
        cfg.keep_records = true;
        cfg.metrics_every = 200;
        auto tr = run(cfg);
        if (opt.inject_fault)
          for (auto& rec : tr.records) rec.e.setZero();
        for (const auto& r : ec_identity_residuals(tr.records, q, gamma)) {
          const double rel = r.norm() / (1.0 + dist0);
          if (rel > worst) {
            worst = rel;
            worst_at = "problem " + std::to_string(j) + " " + to_string(comp);
          }
        }
      }
    }
  }
  const double tol = 1e-9;
  return {check("quadratic-identity", "ec-identity-residual", worst <= tol, worst, tol,
                "max ||r^k||/(1+dist0) over 100 problems x 5 compressors x 2 steps x 200 iters" +
                    (worst_at.empty() ? std::string() : "; worst at " + worst_at),
                t0)};
}

// --- 2 ----------------------------------------------------------------------

std::vector<CheckResult> suite_linear_bounds(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  double worst_direct = -1e300, worst_ec = -1e300;
  for (int j = 0; j < 100; ++j) {
    const auto m = family_member(j);
    const auto c = constants(*m.problem);
    const auto& q = *as_quadratic(*m.problem);
    const double dist0 = (m.x0 - q.x_star()).norm();
    const auto ks = iteration_grid(200);
    // Compressors with a uniform error bound; TopK and sign have none.
    for (const CompressorSpec comp : {CompressorSpec{Exact{}}, CompressorSpec{Rounding{0.1}},
                                      CompressorSpec{EpsBall{0.1}}}) {
      const double eps = *eps_bound(comp, q.dim());
      for (double gamma : {1.0 / c.L, 2.0 / (c.mu + c.L)}) {
        BoundInputs<double> in;
        in.mu = c.mu;
        in.L = c.L;
        in.gamma = gamma;
        in.eps = eps;
        in.x0_dist = dist0;
        const auto b1 = thm1_bound(in, ks);
        const auto b5 = thm5_bound(in, ks);
        for (const char* scheme : {"direct", "ec:hessian"}) {
          auto cfg = base_config(m.problem, comp, scheme_of(scheme, gamma), 200, opt);
          cfg.x0 = m.x0;
          const auto tr = run(cfg);
          const auto& bound = std::string(scheme) == "direct" ? b1 : b5;
          double& worst = std::string(scheme) == "direct" ? worst_direct : worst_ec;
          for (std::size_t r = 0; r < tr.rows.size(); ++r)
            worst = std::max(worst, *tr.rows[r].dist - bound.values[r]);
        }
      }
    }
  }
  const double tol = 1e-9;
  const std::string scope = "100 problems, exact/rounding:0.1/epsball:0.1, both steps, 200 iters";
  return {check("linear-bounds", "thm1-direct", worst_direct <= tol, worst_direct, tol,
                "max(dist - bound); " + scope, t0),
          check("linear-bounds", "thm5-ec-hessian", worst_ec <= tol, worst_ec, tol,
                "max(dist - bound); " + scope, t0)};
}

// --- 3 ----------------------------------------------------------------------

std::vector<CheckResult> suite_lower_bound(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  double worst_match = 0.0, worst_floor = 1e300;
  for (double mu : {0.5, 1.0, 2.0}) {
    Matrix<double> H(1, 1);
    H(0, 0) = mu;
    auto p = std::make_shared<const Problem<double>>(
        QuadraticProblem<double>(H, Vector<double>::Zero(1), 1));
    for (double c : {0.25, 0.5, 0.75, 1.0}) {
      const double gamma = c / mu;
      for (double eps : {0.1, 0.5}) {
        auto cfg = base_config(p, EpsBall{eps}, scheme_of("direct", gamma), 100, opt);
        cfg.x0 = Vector<double>::Constant(1, 2.0 + eps);
        const auto tr = run(cfg);
        for (const auto& row : tr.rows) {
          const auto ref = scalar_worst_case(mu, gamma, eps, 2.0 + eps, row.k);
          worst_match = std::max(worst_match, std::abs(*row.dist - ref.value));
          worst_floor = std::min(worst_floor, *row.dist - ref.floor);
        }
      }
    }
  }
  return {check("lower-bound", "closed-form-match", worst_match <= 1e-12, worst_match, 1e-12,
                "max | |x^k| - closed form |, 24 configs, k <= 100", t0),
          check("lower-bound", "floor-respected", worst_floor >= -1e-12, worst_floor, -1e-12,
                "min(|x^k| - eps/mu)", t0)};
}

// --- 4 ----------------------------------------------------------------------

std::vector<CheckResult> suite_floor_ratio(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  const double kappa = 1000.0;
  const auto p = make_quadratic(10, kappa, 4);
  const double gamma = 1.0 / constants(*p).L;
  std::vector<RunConfig<double>> cfgs;
  for (const char* s : {"direct", "ec:hessian"})
    cfgs.push_back(base_config(p, EpsBall{0.1}, scheme_of(s, gamma), 5000, opt));
  const auto table = compare(cfgs, p);
  const double ratio = table.ratio[0][1];
  const double gap_ratio = *table.entries[0].gap_floor / *table.entries[1].gap_floor;
  std::string detail = "dist floors: direct " + num(*table.entries[0].dist_floor) + ", ec:hessian " +
                       num(*table.entries[1].dist_floor) + "; gap-floor ratio " + num(gap_ratio) +
                       "; d=10, epsball:0.1, gamma=1/L, 5000 iters";
  return {check("floor-ratio", "direct-over-ec-hessian", ratio >= kappa / 2, ratio, kappa / 2,
                detail, t0)};
}

// --- 5 ----------------------------------------------------------------------

std::vector<CheckResult> suite_accumulation(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  const auto p = make_quadratic(2, 10.0, 5);
  const double gamma = 1.0 / constants(*p).L;
  auto diag = [&](const char* scheme, Weighting w) {
    auto cfg = base_config(p, Rounding{1.0}, scheme_of(scheme, gamma), 500, opt);
    cfg.keep_records = true;
    cfg.metrics_every = 500;
    const auto tr = run(cfg);
    const auto d = accumulation_diagnostic(tr.records, *p, gamma, w, 1.0);
    return *std::max_element(d.begin(), d.end());
  };
  const double hess = diag("ec:hessian", Weighting::Hessian);
  const double ident = diag("ec:identity", Weighting::Identity);
  return {check("accumulation", "hessian-weighting-zero", hess <= 1e-9, hess, 1e-9,
                "max_k diagnostic, 2-D quadratic, rounding:1, 500 iters", t0),
          check("accumulation", "identity-weighting-accumulates", ident > 1e-6, ident, 1e-6,
                "max_k diagnostic, alpha=1", t0)};
}

// --- 6 ----------------------------------------------------------------------

std::vector<CheckResult> suite_distributed_deterministic(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  auto data = synth_least_squares<double>({500, 20, 0.1, 6});
  normalize_rows(data);
  const auto p = make_erm(data, 5, Loss::LeastSquares, 0.0);
  const auto c = constants(*p);
  const auto opt_pt = *optimum(*p);
  const double gamma = 2.0 / (c.mu + c.L);
  const double dist0 = opt_pt.x_star.norm();
  const auto ks = iteration_grid(500);
  double worst3 = -1e300, worst6 = -1e300;
  for (const CompressorSpec comp : {CompressorSpec{Rounding{0.01}}, CompressorSpec{EpsBall{0.05}}}) {
    BoundInputs<double> in;
    in.mu = c.mu;
    in.L = c.L;
    in.gamma = gamma;
    in.eps = *eps_bound(comp, 20);
    in.x0_dist = dist0;
    const auto b3 = thm3_bound(in, ks);
    const auto b6 = thm6_bound(in, ks);
    for (const char* scheme : {"direct", "ec:hessian"}) {
      auto cfg = base_config(p, comp, scheme_of(scheme, gamma), 500, opt);
      cfg.known_optimum = opt_pt;
      const auto tr = run(cfg);
      const bool direct = std::string(scheme) == "direct";
      for (std::size_t r = 0; r < tr.rows.size(); ++r) {
        const double excess = *tr.rows[r].dist - (direct ? b3 : b6).values[r];
        (direct ? worst3 : worst6) = std::max(direct ? worst3 : worst6, excess);
      }
    }
  }
  const std::string scope = "5 workers, least squares 500x20, mu=" + num(c.mu) + ", L=" + num(c.L) +
                            ", rounding:0.01 and epsball:0.05, 500 iters";
  return {check("distributed-deterministic", "thm3-direct", worst3 <= 1e-9, worst3, 1e-9,
                "max(dist - bound); " + scope, t0),
          check("distributed-deterministic", "thm6-ec-hessian", worst6 <= 1e-9, worst6, 1e-9,
                "max(dist - bound); " + scope, t0)};
}

// --- 7 ----------------------------------------------------------------------

std::vector<CheckResult> suite_stochastic_bounds(const VerifyOptions& opt) {
  const auto t0 = Clock::now();
  auto data = synth_least_squares<double>({1000, 10, 0.1, 7});
  normalize_rows(data);
  const auto p = make_erm(data, 5, Loss::LeastSquares, 0.0);
  const auto c = constants(*p);
  const auto opt_pt = *optimum(*p);
  const std::size_t batch = static_cast<std::size_t>(shard_size(*p, 0)) / 10;
  StochasticOracleConfig oracle{batch, HessianCoupling::SameBatch, 0, Sampling::WithReplacement};

  const Vector<double> x0 = Vector<double>::Zero(10);
  const double dist0 = (x0 - opt_pt.x_star).norm();
  const auto probes = default_probe_points<double>(x0, dist0, 77);
  const auto var = estimate_variances(*p, oracle, probes, 200);
  const CompressorSpec comp = Rounding{0.05};
  const std::uint64_t iters = 1000, every = 10;
  const double beta = 0.5;

  BoundInputs<double> in;
  in.mu = c.mu;
  in.L = c.L;
  in.eps = *eps_bound(comp, 10);
  in.sigma_sq = var.sigma_sq;
  in.sigma_H_sq = var.sigma_H_sq;
  in.beta = beta;
  in.x0_dist = dist0;
  in.f0_gap = value(*p, x0) - opt_pt.f_star;

  struct Case {
    const char* scheme;
    StepRule rule;
    bool thm7;
  };
  std::vector<CheckResult> out;
  for (const Case& cs : {Case{"direct", {StepRule::Kind::Thm4, 0.0}, false},
                         Case{"ec:hessian", {StepRule::Kind::Thm7b, beta}, true}}) {
    const double gamma = validate_step(cs.rule, c);
    in.gamma = gamma;
    const auto ks0 = iteration_grid(iters, every);
    const auto bounds = cs.thm7 ? thm7_bounds(in, ks0) : thm4_bounds(in, ks0);
    std::vector<double> mean_min(ks0.size(), 0.0), mean_avg(ks0.size(), 0.0);
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
      auto cfg = base_config(p, comp, scheme_of(cs.scheme, gamma), iters, opt);
      cfg.oracle = oracle;
      cfg.seed = 100 + static_cast<std::uint64_t>(s);
      cfg.metrics_every = every;
      cfg.known_optimum = opt_pt;
      const auto tr = run(cfg);
      for (std::size_t r = 0; r < tr.rows.size(); ++r) {
        mean_min[r] += tr.rows[r].mingradsq / seeds;
        mean_avg[r] += *tr.rows[r].avg_gap / seeds;
      }
    }
    double worst_nc = -1e300, worst_sc = -1e300;
    for (std::size_t r = 0; r < ks0.size(); ++r) {
      worst_nc = std::max(worst_nc, mean_min[r] - bounds.nonconvex.values[r]);
      worst_sc = std::max(worst_sc, mean_avg[r] - bounds.strongly_convex->values[r]);
    }
    const std::string tag = cs.thm7 ? "thm7" : "thm4";
    const std::string scope = std::string(cs.scheme) + ", gamma=" + num(gamma) + ", sigma^2=" +
                              num(var.sigma_sq) + ", sigma_H^2=" + num(var.sigma_H_sq) +
                              ", 20 seeds, final mean min||grad||^2=" + num(mean_min.back()) +
                              " vs bound " + num(bounds.nonconvex.values.back());
    out.push_back(check("stochastic-bounds", tag + "-nonconvex", worst_nc <= 1e-9, worst_nc, 1e-9,
                        "max(mean min||grad||^2 - bound); " + scope, t0));
    out.push_back(check("stochastic-bounds", tag + "-strongly-convex", worst_sc <= 1e-9, worst_sc,
                        1e-9, "max(mean f(xbar)-f* - bound); final mean " + num(mean_avg.back()) +
                                  " vs bound " + num(bounds.strongly_convex->values.back()),
                        t0));
  }
  return out;
}

// --- 8 ----------------------------------------------------------------------

std::vector<CheckResult> suite_experiment_shape(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  auto data = synth_least_squares<double>({4000, 400, 0.1, 8});
  normalize_rows(data);
  const std::uint64_t iters = 2000, every = 100;
  {
    const auto t0 = Clock::now();
    const auto p = make_erm(data, 5, Loss::LeastSquares, 0.0);
    const double gamma = validate_step(StepRule{StepRule::Kind::PaperLs, 0.0}, constants(*p));
    const auto known = optimum(*p);
    std::map<std::string, double> gap;
    for (const char* s : {"direct", "ec:hessian", "ec:diag"}) {
      auto cfg = base_config(p, ScaledSign{}, scheme_of(s, gamma), iters, opt);
      cfg.metrics_every = every;
      cfg.known_optimum = known;
      gap[s] = *run(cfg).rows.back().gap;
    }
    const double r_h = gap["ec:hessian"] / gap["direct"];
    const double r_d = gap["ec:diag"] / gap["direct"];
    out.push_back(check("experiment-shape", "least-squares-ec-hessian", r_h <= 0.1, r_h, 0.1,
                        "final gap ratio EC-H/Non-EC; gaps direct " + num(gap["direct"]) +
                            ", ec:hessian " + num(gap["ec:hessian"]),
                        t0));
    out.push_back(check("experiment-shape", "least-squares-ec-diag", r_d <= 1.0, r_d, 1.0,
                        "final gap ratio EC-diag-H/Non-EC; ec:diag gap " + num(gap["ec:diag"]), t0));
  }
  {
    const auto t0 = Clock::now();
    const auto p = make_erm(data, 5, Loss::Robust, 0.0);
    const double gamma = validate_step(StepRule{StepRule::Kind::PaperRobust, 0.0}, constants(*p));
    std::map<std::string, double> mg;
    for (const char* s : {"direct", "ec:identity", "ec:hessian"}) {
      auto cfg = base_config(p, ScaledSign{}, scheme_of(s, gamma), iters, opt);
      cfg.metrics_every = every;
      mg[s] = run(cfg).rows.back().mingradsq;
    }
    const double slack = 1.05;
    const double r1 = mg["ec:hessian"] / mg["ec:identity"];
    const double r2 = mg["ec:identity"] / mg["direct"];
    const double worst = std::max(r1, r2);
    out.push_back(check("experiment-shape", "robust-ordering", worst <= slack, worst, slack,
                        "max(EC-H/EC-I, EC-I/Non-EC) of min||grad||^2; gamma=" + num(gamma) +
                            "; direct " + num(mg["direct"]) + ", ec:identity " +
                            num(mg["ec:identity"]) + ", ec:hessian " + num(mg["ec:hessian"]),
                        t0));
  }
  return out;
}

// --- 9 ----------------------------------------------------------------------

Shard<double> random_shard(std::mt19937_64& rng, Eigen::Index m, Eigen::Index d, Loss loss) {
  Shard<double> s;
  s.features = standard_normal_matrix<double>(m, d, rng);
  s.labels = standard_normal_matrix<double>(m, 1, rng);
  if (loss == Loss::Logistic)
    s.labels = s.labels.unaryExpr([](double y) { return y > 0 ? 1.0 : -1.0; });
  return s;
}

std::vector<CheckResult> suite_oracles(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  auto t0 = Clock::now();
  {
    double worst_g = 0.0, worst_h = 0.0;
    std::mt19937_64 rng(9);
    const Loss losses[] = {Loss::LeastSquares, Loss::Logistic, Loss::Robust};
    for (int j = 0; j < 100; ++j) {
      const Loss loss = losses[j % 3];
      const Eigen::Index d = 2 + j % 5;
      std::vector<Shard<double>> shards{random_shard(rng, 6, d, loss), random_shard(rng, 4, d, loss)};
      const Problem<double> p = ErmProblem<double>(shards, loss, j % 2 ? 0.1 : 0.0);
      const Vector<double> x = 0.5 * standard_normal_matrix<double>(d, 1, rng);
      const Vector<double> g = grad(p, x);
      const Matrix<double> H = hessian(p, x);
      Vector<double> fd_g(d);
      Matrix<double> fd_h(d, d);
      for (Eigen::Index k = 0; k < d; ++k) {
        const double h = 1e-5;
        Vector<double> xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        fd_g(k) = (value(p, xp) - value(p, xm)) / (2 * h);
        fd_h.col(k) = (grad(p, xp) - grad(p, xm)) / (2 * h);
      }
      worst_g = std::max(worst_g, (fd_g - g).norm() / std::max(1.0, g.norm()));
      worst_h = std::max(worst_h, (fd_h - H).norm() / std::max(1.0, H.norm()));
    }
    out.push_back(check("oracles", "gradient-finite-difference", worst_g <= 1e-6, worst_g, 1e-6,
                        "max relative error, 100 random (problem, x) pairs, all losses", t0));
    out.push_back(check("oracles", "hessian-finite-difference", worst_h <= 1e-5, worst_h, 1e-5,
                        "max relative error, 100 random (problem, x) pairs, all losses", t0));
  }
  t0 = Clock::now();
  {
    std::mt19937_64 rng(19);
    std::vector<Shard<double>> shards{random_shard(rng, 12, 3, Loss::Robust)};
    const Problem<double> p = ErmProblem<double>(shards, Loss::Robust, 0.05);
    const Vector<double> x = standard_normal_matrix<double>(3, 1, rng);
    const Vector<double> g = grad(p, 0, x);
    StochasticOracleConfig oracle{3, HessianCoupling::SameBatch, 2024, Sampling::WithReplacement};
    const std::size_t draws = 100000;
    Vector<double> sum = Vector<double>::Zero(3), sumsq = Vector<double>::Zero(3);
    for (std::size_t t = 0; t < draws; ++t) {
      const Vector<double> s = stochastic_grad(p, 0, x, oracle, t);
      sum += s;
      sumsq += s.cwiseProduct(s);
    }
    const Vector<double> mean = sum / double(draws);
    const Vector<double> var = (sumsq / double(draws) - mean.cwiseProduct(mean)) * (double(draws) / (draws - 1));
    const Vector<double> se = (var / double(draws)).cwiseSqrt();
    const double worst = ((mean - g).cwiseAbs().array() / se.array()).maxCoeff();
    out.push_back(check("oracles", "stochastic-gradient-unbiased", worst <= 3.0, worst, 3.0,
                        "max |mean - grad| in standard errors, 1e5 draws", t0));
  }
  t0 = Clock::now();
  {
    auto data = synth_least_squares<double>({200, 6, 0.1, 29});
    normalize_rows(data);
    const auto p = make_erm(data, 4, Loss::Logistic, 0.01);
    const double gamma = 0.5;
    std::vector<Vector<double>> reference;
    bool identical = true;
    std::string first_mismatch;
    for (const auto& oracle : {Oracle{}, Oracle{StochasticOracleConfig{5, HessianCoupling::SameBatch, 0,
                                                                       Sampling::WithReplacement}}}) {
      std::vector<Vector<double>> base;
      for (const char* s : {"direct", "ec:identity", "ec:hessian", "ec:diag", "ec:bfgs"}) {
        auto cfg = base_config(p, Exact{}, scheme_of(s, gamma), 60, opt);
        cfg.oracle = oracle;
        cfg.seed = 5;
        cfg.keep_records = true;
        const auto tr = run(cfg);
        std::vector<Vector<double>> xs;
        for (const auto& r : tr.records) xs.push_back(r.x);
        if (base.empty()) {
          base = xs;
        } else if (xs.size() != base.size() ||
                   !std::equal(xs.begin(), xs.end(), base.begin(),
                               [](const auto& a, const auto& b) { return (a.array() == b.array()).all(); })) {
          identical = false;
          if (first_mismatch.empty()) first_mismatch = s;
        }
      }
    }
    out.push_back(check("oracles", "exact-compressor-schemes-identical", identical, identical ? 1 : 0, 1,
                        identical ? "direct and four EC weightings, deterministic and stochastic"
                                  : "mismatch in " + first_mismatch,
                        t0));
  }
  return out;
}

// --- 10 ---------------------------------------------------------------------

struct LibsvmCase {
  const char* line;
  bool ok;
  // For accepted lines: label, feature count; for rejected: an error substring.
  double label;
  std::size_t n_features;
  const char* error;
};

std::vector<CheckResult> suite_libsvm(const VerifyOptions&) {
  std::vector<CheckResult> out;
  auto t0 = Clock::now();
  const LibsvmCase cases[] = {
      {"+1 1:0.5 3:-2", true, 1.0, 2, ""},
      {"-1", true, -1.0, 0, ""},
      {"1 2:1 1:1", false, 0, 0, "non-increasing index"},
      {"0 1:1e-3 7:4.5E2   # trailing comment", true, 0.0, 2, ""},
      {"2.5\t4:1\t9:-0.25", true, 2.5, 2, ""},
      {"abc 1:1", false, 0, 0, "malformed label"},
      {"1 0:1", false, 0, 0, "positive integer"},
      {"1 1:nan", false, 0, 0, "non-finite"},
      {"1 1:inf", false, 0, 0, "non-finite"},
      {"1 3:2 3:3", false, 0, 0, "non-increasing index"},
      {"1 x:1", false, 0, 0, "malformed index"},
      {"1 1:2 5", false, 0, 0, "malformed token"},
  };
  int wrong = 0;
  std::string detail;
  for (const auto& c : cases) {
    std::istringstream in(c.line);
    bool good = false;
    try {
      const auto data = parse_libsvm(in);
      good = c.ok && data.records.size() == 1 && data.records[0].label == c.label &&
             data.records[0].features.size() == c.n_features;
    } catch (const ParseError& e) {
      good = !c.ok && e.line() == 1 && std::string(e.what()).find(c.error) != std::string::npos;
    }
    if (!good) {
      ++wrong;
      detail += std::string(" [") + c.line + "]";
    }
  }
  out.push_back(check("libsvm", "fixture-lines", wrong == 0, wrong, 0,
                      "12 crafted lines" + (detail.empty() ? std::string() : "; wrong:" + detail), t0));

  t0 = Clock::now();
  const char* text =
      "# header\n1 1:3 2:4\n-1 2:1\n\n1\n-1 1:0.5 3:0.5\n1 1:1 2:1 3:1\n-1 3:2\n1 2:-7\n";
  auto once = [&]() {
    std::istringstream in(text);
    auto recs = normalize_samples(parse_libsvm(in).records);
    std::ostringstream os;
    serialize_libsvm(os, recs);
    for (auto policy : {ShardPolicy::Contiguous, ShardPolicy::RoundRobin}) {
      for (const auto& s : shard(recs, 3, policy)) {
        os << "--\n";
        serialize_libsvm(os, s);
      }
    }
    return os.str();
  };
  const std::string a = once(), b = once();
  std::istringstream in(text);
  const auto recs = parse_libsvm(in).records;
  bool partition = true;
  for (auto policy : {ShardPolicy::Contiguous, ShardPolicy::RoundRobin}) {
    const auto parts = shard(recs, 3, policy);
    std::size_t total = 0, lo = recs.size(), hi = 0;
    for (const auto& s : parts) {
      total += s.size();
      lo = std::min(lo, s.size());
      hi = std::max(hi, s.size());
    }
    partition = partition && total == recs.size() && hi - lo <= 1;
  }
  const bool unit = std::abs(normalize_samples(recs)[0].features[0].second - 0.6) < 1e-15;
  const bool ok = a == b && partition && unit;
  out.push_back(check("libsvm", "normalize-shard-deterministic", ok, ok ? 1 : 0, 1,
                      "repeat runs byte-identical, partition sizes differ by <= 1", t0));
  return out;
}

using SuiteFn = std::function<std::vector<CheckResult>(const VerifyOptions&)>;

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> r = {
      {"quadratic-identity", suite_quadratic_identity},
      {"linear-bounds", suite_linear_bounds},
      {"lower-bound", suite_lower_bound},
      {"floor-ratio", suite_floor_ratio},
      {"accumulation", suite_accumulation},
      {"distributed-deterministic", suite_distributed_deterministic},
      {"stochastic-bounds", suite_stochastic_bounds},
      {"experiment-shape", suite_experiment_shape},
      {"oracles", suite_oracles},
      {"libsvm", suite_libsvm},
  };
  return r;
}

}  // namespace

std::vector<std::string> suite_names() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : registry()) names.push_back(name);
  return names;
}

std::vector<CheckResult> run_suite(const std::string& name, const VerifyOptions& options) {
  for (const auto& [n, fn] : registry())
    if (n == name) return fn(options);
  throw ConfigError("unknown suite '" + name + "'");
}

std::string to_json_line(const CheckResult& r) {
  nlohmann::json j = {{"suite", r.suite},   {"check", r.name},         {"pass", r.pass},
                      {"value", r.value},   {"threshold", r.threshold}, {"detail", r.detail},
                      {"seconds", r.seconds}};
  return j.dump();
}

}  // namespace ecgrad
