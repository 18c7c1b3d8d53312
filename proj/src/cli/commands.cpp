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

#include "cli.hpp"
#include "settings.hpp"

#include "ecgrad/compressors.hpp"
#include "ecgrad/data_io.hpp"
#include "ecgrad/parallel.hpp"
#include "ecgrad/problems.hpp"
#include "ecgrad/schemes.hpp"
#include "ecgrad/simulation.hpp"
#include "ecgrad/theory.hpp"
#include "ecgrad/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ecgrad::cli {
namespace {

namespace fs = std::filesystem;

struct Flags {
  std::string preset;
  std::string config;
  std::string out = ".";
  std::vector<std::string> overrides;
  std::optional<std::string> seed, scheme, compressor, gamma_rule, workers, iters, batch;
  std::optional<std::string> beta, schemes;
  std::vector<std::string> theorems;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--preset", f.preset, "Built-in experiment preset");
  cmd->add_option("--config", f.config, "Settings file (key = value with [sections])");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--set", f.overrides, "Override a setting: section.key=value");
  cmd->add_option("--seed", f.seed, "Sampling seed");
  cmd->add_option("--scheme", f.scheme, "direct | ec:identity | ec:scaled:A | ec:hessian | ec:diag | ec:bfgs");
  cmd->add_option("--compressor", f.compressor, "exact | rounding:D | sign | topk:K | epsball:E");
  cmd->add_option("--gamma-rule", f.gamma_rule,
                  "1/L | 2/(mu+L) | C/L | thm4 | thm7b:BETA | paper-ls | paper-robust | number");
  cmd->add_option("--workers", f.workers, "Number of workers");
  cmd->add_option("--iters", f.iters, "Iterations");
  cmd->add_option("--batch", f.batch, "Mini-batch size per worker, or 'full'");
}

Settings resolve(const Flags& f) {
  Settings s;
  if (!f.preset.empty()) {
    const auto it = presets().find(f.preset);
    if (it == presets().end()) throw ConfigError("unknown preset '" + f.preset + "'");
    s.merge_text(it->second, "preset " + f.preset);
  }
  if (!f.config.empty()) s.merge_file(f.config);
  for (const auto& o : f.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + o + "'");
    s.set(o.substr(0, eq), o.substr(eq + 1));
  }
  auto apply = [&](const std::optional<std::string>& v, const char* key) {
    if (v) s.set(key, *v);
  };
  apply(f.seed, "simulation.seed");
  apply(f.scheme, "schemes.scheme");
  apply(f.compressor, "compressors.compressor");
  apply(f.gamma_rule, "schemes.gamma_rule");
  apply(f.workers, "problem.workers");
  apply(f.iters, "simulation.iterations");
  apply(f.batch, "simulation.batch");
  apply(f.beta, "theory.beta");
  apply(f.schemes, "simulation.schemes");
  if (!f.theorems.empty()) {
    std::string joined;
    for (const auto& t : f.theorems) joined += (joined.empty() ? "" : ",") + t;
    s.set("theory.theorems", joined);
  }
  return s;
}

struct Built {
  std::shared_ptr<const Problem<double>> problem;
  Constants<double> constants;
  std::optional<Optimum<double>> optimum;
};

std::size_t positive(const Settings& s, const char* key) {
  const auto v = s.integer(key);
  if (v < 1) throw ConfigError(std::string(key) + " must be at least 1");
  return static_cast<std::size_t>(v);
}

Built build_problem(const Settings& s) {
  const std::string kind = s.get("problem.kind");
  const std::size_t workers = positive(s, "problem.workers");
  Built b;
  if (kind == "quadratic") {
    const auto in = synth_quadratic<double>(
        {static_cast<Eigen::Index>(positive(s, "problem.d")), s.number("problem.kappa"),
         static_cast<std::uint64_t>(s.integer("problem.seed"))});
    b.problem = std::make_shared<const Problem<double>>(QuadraticProblem<double>(in.H, in.b, workers));
  } else if (kind == "scalar") {
    Matrix<double> H(1, 1);
    H(0, 0) = s.number("problem.mu");
    b.problem = std::make_shared<const Problem<double>>(
        QuadraticProblem<double>(H, Vector<double>::Zero(1), workers));
  } else if (kind == "least-squares" || kind == "logistic" || kind == "robust") {
    const Loss loss = kind == "least-squares" ? Loss::LeastSquares
                      : kind == "logistic"    ? Loss::Logistic
                                              : Loss::Robust;
    Dataset<double> data;
    if (s.is_set("problem.data")) {
      data = to_dataset<double>(read_libsvm_file(s.get("problem.data")).records);
    } else {
      data = synth_least_squares<double>(
          {static_cast<Eigen::Index>(positive(s, "problem.samples")),
           static_cast<Eigen::Index>(positive(s, "problem.d")), s.number("problem.noise"),
           static_cast<std::uint64_t>(s.integer("problem.seed"))});
    }
    if (s.boolean("problem.normalize")) normalize_rows(data);
    const std::string policy = s.get("problem.sharding");
    if (policy != "contiguous" && policy != "round-robin")
      throw ConfigError("problem.sharding must be contiguous or round-robin");
    if (static_cast<std::size_t>(data.size()) < workers)
      throw ConfigError("fewer samples than workers");
    b.problem = std::make_shared<const Problem<double>>(ErmProblem<double>(
        make_shards(data, workers, loss,
                    policy == "contiguous" ? ShardPolicy::Contiguous : ShardPolicy::RoundRobin),
        loss, s.number("problem.lambda")));
  } else {
    throw ConfigError("unknown problem.kind '" + kind +
                      "' (expected quadratic, scalar, least-squares, logistic or robust)");
  }
  b.constants = constants(*b.problem);
  b.optimum = optimum(*b.problem);
  return b;
}

double beta_or_default(const Settings& s) { return s.is_set("theory.beta") ? s.number("theory.beta") : 0.5; }

double resolve_gamma(const Settings& s, const Built& b) {
  const double gamma = validate_step(parse_step_rule(s.get("schemes.gamma_rule")), b.constants);
  const std::string th = s.get("schemes.theorem");
  if (th != "none") check_step_for(parse_theorem(th), gamma, b.constants, beta_or_default(s));
  return gamma;
}

Oracle build_oracle(const Settings& s) {
  const std::string batch = s.get("simulation.batch");
  if (batch == "full") return std::nullopt;
  StochasticOracleConfig o;
  o.batch_size = positive(s, "simulation.batch");
  const std::string coupling = s.get("simulation.coupling");
  if (coupling == "same") o.hessian_coupling = HessianCoupling::SameBatch;
  else if (coupling == "independent") o.hessian_coupling = HessianCoupling::IndependentBatch;
  else throw ConfigError("simulation.coupling must be same or independent");
  const std::string sampling = s.get("simulation.sampling");
  if (sampling == "with-replacement") o.sampling = Sampling::WithReplacement;
  else if (sampling == "without-replacement") o.sampling = Sampling::WithoutReplacement;
  else throw ConfigError("simulation.sampling must be with-replacement or without-replacement");
  o.seed = static_cast<std::uint64_t>(s.integer("simulation.seed"));
  return o;
}

Vector<double> build_x0(const Settings& s, Eigen::Index d) {
  const std::string x0 = s.get("simulation.x0");
  if (x0 == "zero") return Vector<double>::Zero(d);
  if (x0.rfind("const:", 0) == 0) {
    Settings tmp;
    tmp.set("theory.eps", x0.substr(6));
    return Vector<double>::Constant(d, tmp.number("theory.eps"));
  }
  throw ConfigError("simulation.x0 must be zero or const:V");
}

RunConfig<double> build_run(const Settings& s, const Built& b, const std::string& scheme_text) {
  RunConfig<double> cfg;
  cfg.problem = b.problem;
  cfg.compressor = parse_compressor(s.get("compressors.compressor"));
  cfg.scheme = parse_scheme(scheme_text);
  cfg.scheme.gamma = resolve_gamma(s, b);
  cfg.n_workers = workers(*b.problem);
  const auto iters = s.integer("simulation.iterations");
  if (iters < 1) throw ConfigError("simulation.iterations must be at least 1");
  cfg.iterations = static_cast<std::uint64_t>(iters);
  cfg.oracle = build_oracle(s);
  cfg.seed = static_cast<std::uint64_t>(s.integer("simulation.seed"));
  cfg.metrics_every = positive(s, "simulation.metrics_every");
  cfg.x0 = build_x0(s, dim(*b.problem));
  cfg.threads = threads_from_env();
  cfg.known_optimum = b.optimum;
  return cfg;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw ConfigError("cannot create output directory '" + dir + "'");
  return p;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  return os;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : ""; }

int cmd_run(const Flags& f, std::ostream& out) {
  const Settings s = resolve(f);
  const Built b = build_problem(s);
  const auto cfg = build_run(s, b, s.get("schemes.scheme"));
  const auto dir = prepare_out(f.out);
  {
    auto os = open_out(dir / "config.resolved");
    os << s.resolved();
  }
  const auto trace = run(cfg);
  {
    auto os = open_out(dir / "trace.csv");
    write_trace_csv(os, trace);
  }
  const auto& last = trace.rows.back();
  out << "scheme " << to_string(cfg.scheme) << ", compressor " << to_string(cfg.compressor)
      << ", gamma " << num(cfg.scheme.gamma) << '\n';
  out << "k=" << last.k << " dist=" << opt_num(last.dist) << " gap=" << opt_num(last.gap)
      << " mingradsq=" << num(last.mingradsq) << '\n';
  out << "wrote " << (dir / "trace.csv").string() << '\n';
  return kOk;
}

int cmd_compare(const Flags& f, std::ostream& out) {
  const Settings s = resolve(f);
  const Built b = build_problem(s);
  const auto names = s.list("simulation.schemes");
  if (names.empty()) throw ConfigError("simulation.schemes is empty");
  std::vector<RunConfig<double>> cfgs;
  for (const auto& n : names) cfgs.push_back(build_run(s, b, n));
  const auto dir = prepare_out(f.out);
  {
    auto os = open_out(dir / "config.resolved");
    os << s.resolved();
  }
  const auto table = compare(cfgs, b.problem, names);
  auto os = open_out(dir / "compare.csv");
  os << "scheme,dist_floor,gap_floor,mingradsq,ratio_to_first\n";
  for (std::size_t j = 0; j < table.entries.size(); ++j) {
    const auto& e = table.entries[j];
    os << e.name << ',' << opt_num(e.dist_floor) << ',' << opt_num(e.gap_floor) << ','
       << num(e.mingradsq_final) << ',' << num(table.ratio[j][0]) << '\n';
    auto ts = open_out(dir / ("trace_" + std::to_string(j) + ".csv"));
    write_trace_csv(ts, e.trace);
    out << e.name << ": dist_floor=" << opt_num(e.dist_floor) << " gap_floor=" << opt_num(e.gap_floor)
        << " mingradsq=" << num(e.mingradsq_final) << " ratio_to_first(" << to_string(table.metric)
        << ")=" << num(table.ratio[j][0]) << '\n';
  }
  out << "wrote " << (dir / "compare.csv").string() << '\n';
  return kOk;
}

void write_curve_csv(std::ostream& os, const std::vector<std::string>& columns,
                     const std::vector<std::uint64_t>& ks,
                     const std::vector<const BoundCurve<double>*>& curves) {
  os << "k";
  for (const auto& c : columns) os << ',' << c;
  os << '\n';
  for (std::size_t r = 0; r < ks.size(); ++r) {
    os << ks[r];
    for (const auto* c : curves) {
      if (c) os << ',' << num(c->values[r]) << ',' << num(c->floor);
      else os << ",,";
    }
    os << '\n';
  }
}

int cmd_bounds(const Flags& f, std::ostream& out) {
  const Settings s = resolve(f);
  const auto theorems = s.list("theory.theorems");
  if (theorems.empty()) throw ConfigError("no theorem requested (use --theorem or theory.theorems)");
  const Built b = build_problem(s);
  const auto cfg = build_run(s, b, s.get("schemes.scheme"));
  const Eigen::Index d = dim(*b.problem);
  const auto ks = iteration_grid(cfg.iterations, cfg.metrics_every);

  BoundInputs<double> in;
  in.mu = b.constants.mu;
  in.L = b.constants.L;
  in.gamma = cfg.scheme.gamma;
  if (s.is_set("theory.eps")) {
    in.eps = s.number("theory.eps");
  } else {
    const auto eps = eps_bound(cfg.compressor, d);
    if (!eps) throw ConfigError("compressor " + to_string(cfg.compressor) + " has no finite eps; set theory.eps");
    in.eps = *eps;
  }
  if (s.is_set("theory.beta")) in.beta = s.number("theory.beta");
  if (cfg.oracle && !(s.is_set("theory.sigma_sq") && s.is_set("theory.sigma_h_sq"))) {
    const double radius = b.optimum ? std::max(1.0, (*cfg.x0 - b.optimum->x_star).norm()) : 1.0;
    const auto probes = default_probe_points<double>(*cfg.x0, radius, cfg.seed);
    const auto v = estimate_variances(*b.problem, *cfg.oracle, probes,
                                      positive(s, "theory.probe_draws"));
    in.sigma_sq = v.sigma_sq;
    in.sigma_H_sq = v.sigma_H_sq;
  }
  if (s.is_set("theory.sigma_sq")) in.sigma_sq = s.number("theory.sigma_sq");
  if (s.is_set("theory.sigma_h_sq")) in.sigma_H_sq = s.number("theory.sigma_h_sq");
  if (!b.optimum) throw ConfigError("bounds need a known optimum; this problem has none");
  in.x0_dist = (*cfg.x0 - b.optimum->x_star).norm();
  in.f0_gap = value(*b.problem, *cfg.x0) - b.optimum->f_star;

  const auto dir = prepare_out(f.out);
  for (const auto& name : theorems) {
    const Theorem th = parse_theorem(name);
    if (th == Theorem::Thm7b && !s.is_set("theory.beta"))
      throw ConfigError("thm7b needs an explicit beta (--beta or theory.beta)");
    check_step_for(th, in.gamma, b.constants, in.beta);
    auto os = open_out(dir / ("bounds_" + name + ".csv"));
    switch (th) {
      case Theorem::Thm1:
      case Theorem::Thm3:
      case Theorem::Thm5:
      case Theorem::Thm6: {
        const auto curve = th == Theorem::Thm1   ? thm1_bound(in, ks)
                           : th == Theorem::Thm3 ? thm3_bound(in, ks)
                           : th == Theorem::Thm5 ? thm5_bound(in, ks)
                                                 : thm6_bound(in, ks);
        write_curve_csv(os, {"bound", "floor"}, ks, {&curve});
        break;
      }
      case Theorem::Thm4: {
        const auto both = thm4_bounds(in, ks);
        write_curve_csv(os, {"nonconvex", "nonconvex_floor", "strongly_convex", "strongly_convex_floor"},
                        ks, {&both.nonconvex, both.strongly_convex ? &*both.strongly_convex : nullptr});
        break;
      }
      case Theorem::Thm7a: {
        const auto both = thm7_bounds(in, ks);
        write_curve_csv(os, {"nonconvex", "nonconvex_floor"}, ks, {&both.nonconvex});
        break;
      }
      case Theorem::Thm7b: {
        if (!(in.mu > 0.0)) throw ConfigError("thm7b: requires mu > 0");
        const auto both = thm7_bounds(in, ks);
        write_curve_csv(os, {"strongly_convex", "strongly_convex_floor"}, ks, {&*both.strongly_convex});
        break;
      }
    }
    out << "wrote " << (dir / ("bounds_" + name + ".csv")).string() << '\n';
  }
  return kOk;
}

int cmd_verify(const std::string& suite, const std::string& report, bool inject_fault,
               std::ostream& out) {
  std::vector<std::string> suites;
  if (suite == "all") {
    suites = suite_names();
  } else {
    const auto names = suite_names();
    if (std::find(names.begin(), names.end(), suite) == names.end())
      throw ConfigError("unknown suite '" + suite + "'");
    suites.push_back(suite);
  }
  VerifyOptions opt;
  opt.threads = threads_from_env();
  opt.inject_fault = inject_fault;
  std::ofstream file;
  if (!report.empty()) {
    const auto parent = std::filesystem::path(report).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    file.open(report);
    if (!file) throw ConfigError("cannot write '" + report + "'");
  }
  bool all_pass = true;
  for (const auto& name : suites) {
    for (const auto& r : run_suite(name, opt)) {
      all_pass = all_pass && r.pass;
      const auto line = to_json_line(r);
      out << line << '\n';
      if (file) file << line << '\n';
    }
  }
  return all_pass ? kOk : kFailed;
}

}  // namespace

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compressed gradient methods with error compensation: runs, bounds, verification"};
  app.name("ecgrad");
  app.require_subcommand(1);

  Flags f;
  auto* run_cmd = app.add_subcommand("run", "Run one experiment and write trace.csv");
  add_common(run_cmd, f);
  auto* compare_cmd = app.add_subcommand("compare", "Run several schemes on one problem");
  add_common(compare_cmd, f);
  compare_cmd->add_option("--schemes", f.schemes, "Comma-separated scheme list");
  auto* bounds_cmd = app.add_subcommand("bounds", "Write theorem bound curves as CSV");
  add_common(bounds_cmd, f);
  bounds_cmd->add_option("--theorem", f.theorems, "thm1 | thm3 | thm4 | thm5 | thm6 | thm7a | thm7b");
  bounds_cmd->add_option("--beta", f.beta, "Analysis parameter in (0, 1) for thm7b");

  std::string suite = "all", report;
  bool inject_fault = false;
  auto* verify_cmd = app.add_subcommand("verify", "Run a verification suite (JSON lines on stdout)");
  verify_cmd->add_option("suite", suite, "Suite name or 'all'");
  verify_cmd->add_option("--report", report, "Also write the JSON-lines report to this file");
  verify_cmd->add_flag("--inject-fault", inject_fault, "Break a suite on purpose (harness self-test)")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run_cmd) return cmd_run(f, out);
    if (*compare_cmd) return cmd_compare(f, out);
    if (*bounds_cmd) return cmd_bounds(f, out);
    if (*verify_cmd) return cmd_verify(suite, report, inject_fault, out);
  } catch (const DivergedError& e) {
    err << "error: " << e.what() << '\n';
    return kDiverged;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainError& e) {
    err << "input error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kConfigError;
}

}  // namespace ecgrad::cli
