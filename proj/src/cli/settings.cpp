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

#include "settings.hpp"

#include "ecgrad/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ecgrad::cli {
namespace {

const std::vector<std::pair<std::string, std::string>>& defaults() {
  static const std::vector<std::pair<std::string, std::string>> d = {
      {"problem.kind", "quadratic"},
      {"problem.d", "10"},
      {"problem.kappa", "100"},
      {"problem.mu", "1"},
      {"problem.seed", "1"},
      {"problem.data", ""},
      {"problem.samples", "4000"},
      {"problem.noise", "0.1"},
      {"problem.normalize", "true"},
      {"problem.sharding", "contiguous"},
      {"problem.lambda", "0"},
      {"problem.workers", "1"},
      {"compressors.compressor", "exact"},
      {"schemes.scheme", "direct"},
      {"schemes.gamma_rule", "1/L"},
      {"schemes.theorem", "none"},
      {"simulation.iterations", "100"},
      {"simulation.batch", "full"},
      {"simulation.coupling", "same"},
      {"simulation.sampling", "with-replacement"},
      {"simulation.seed", "0"},
      {"simulation.metrics_every", "1"},
      {"simulation.x0", "zero"},
      {"simulation.schemes", "direct,ec:hessian"},
      {"theory.theorems", ""},
      {"theory.beta", ""},
      {"theory.eps", ""},
      {"theory.sigma_sq", ""},
      {"theory.sigma_h_sq", ""},
      {"theory.probe_draws", "200"},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Settings::Settings() {
  for (const auto& [k, v] : defaults()) values_[k] = v;
}

void Settings::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) throw ConfigError("unknown setting '" + key + "'");
  values_[key] = value;
}

void Settings::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto cut = line.find_first_of("#;");
    line = trim(cut == std::string::npos ? line : line.substr(0, cut));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string full = section.empty() ? key : section + "." + key;
    if (!values_.count(full)) throw ConfigError(where + ": unknown setting '" + full + "'");
    values_[full] = trim(line.substr(eq + 1));
  }
}

void Settings::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), path);
}

const std::string& Settings::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown setting '" + key + "'");
  return it->second;
}

double Settings::number(const std::string& key) const {
  const std::string& s = get(key);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(key + ": '" + s + "' is not a finite number");
  return v;
}

long long Settings::integer(const std::string& key) const {
  const std::string& s = get(key);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(key + ": '" + s + "' is not an integer");
  return v;
}

bool Settings::boolean(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key + ": '" + s + "' is not a boolean");
}

std::vector<std::string> Settings::list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string Settings::resolved() const {
  std::ostringstream os;
  std::string section;
  for (const auto& [full, unused] : defaults()) {
    const auto dot = full.find('.');
    const std::string sec = full.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << '\n';
      os << '[' << sec << "]\n";
      section = sec;
    }
    os << full.substr(dot + 1) << " = " << values_.at(full) << '\n';
  }
  return os.str();
}

const std::map<std::string, std::string>& presets() {
  static const std::map<std::string, std::string> p = {
      {"quadratic-floor",
       "[problem]\nkind = quadratic\nd = 10\nkappa = 1000\nseed = 4\n"
       "[compressors]\ncompressor = epsball:0.1\n"
       "[schemes]\nscheme = ec:hessian\ngamma_rule = 1/L\n"
       "[simulation]\niterations = 5000\nmetrics_every = 10\n"},
      {"scalar-example",
       "[problem]\nkind = scalar\nmu = 1\n"
       "[compressors]\ncompressor = epsball:0.5\n"
       "[schemes]\nscheme = direct\ngamma_rule = 0.5/L\n"
       "[simulation]\niterations = 100\nx0 = const:2.5\n"},
      {"paper-ls",
       "[problem]\nkind = least-squares\nsamples = 4000\nd = 400\nnoise = 0.1\nseed = 8\nworkers = 5\n"
       "[compressors]\ncompressor = sign\n"
       "[schemes]\nscheme = ec:hessian\ngamma_rule = paper-ls\n"
       "[simulation]\niterations = 2000\nmetrics_every = 10\n"
       "schemes = direct,ec:identity,ec:hessian,ec:diag,ec:bfgs\n"},
      {"paper-robust",
       "[problem]\nkind = robust\nsamples = 4000\nd = 400\nnoise = 0.1\nseed = 8\nworkers = 5\n"
       "[compressors]\ncompressor = sign\n"
       "[schemes]\nscheme = ec:hessian\ngamma_rule = paper-robust\n"
       "[simulation]\niterations = 2000\nmetrics_every = 10\n"
       "schemes = direct,ec:identity,ec:hessian,ec:diag,ec:bfgs\n"},
      {"thm4",
       "[problem]\nkind = least-squares\nsamples = 1000\nd = 10\nseed = 7\nworkers = 5\n"
       "[compressors]\ncompressor = rounding:0.05\n"
       "[schemes]\nscheme = direct\ngamma_rule = thm4\ntheorem = thm4\n"
       "[simulation]\niterations = 1000\nbatch = 20\nmetrics_every = 10\n"
       "[theory]\ntheorems = thm4\n"},
  };
  return p;
}

}  // namespace ecgrad::cli
