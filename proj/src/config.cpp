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
#include "ecgrad/schemes.hpp"
#include "ecgrad/theory.hpp"

#include <charconv>
#include <string>
#include <string_view>

namespace ecgrad {
namespace {

double number_or_throw(std::string_view s, const std::string& what) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(what + ": '" + std::string(s) + "' is not a finite number");
  return v;
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::pair<std::string_view, std::string_view> split_head(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos) return {s, {}};
  return {s.substr(0, colon), s.substr(colon + 1)};
}

}  // namespace

CompressorSpec parse_compressor(const std::string& text) {
  const auto [head, arg] = split_head(text);
  CompressorSpec spec;
  if (head == "exact" && arg.empty()) {
    spec = Exact{};
  } else if (head == "sign" && arg.empty()) {
    spec = ScaledSign{};
  } else if (head == "rounding") {
    spec = Rounding{number_or_throw(arg, "rounding")};
  } else if (head == "epsball") {
    spec = EpsBall{number_or_throw(arg, "epsball")};
  } else if (head == "topk") {
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), k);
    if (arg.empty() || ec != std::errc() || ptr != arg.data() + arg.size())
      throw ConfigError("topk: '" + std::string(arg) + "' is not a positive integer");
    spec = TopK{k};
  } else {
    throw ConfigError("unknown compressor '" + text +
                      "' (expected exact, rounding:D, sign, topk:K or epsball:E)");
  }
  validate(spec, -1);
  return spec;
}

std::string to_string(const CompressorSpec& spec) {
  return std::visit(
      [](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Exact>) return "exact";
        if constexpr (std::is_same_v<T, Rounding>) return "rounding:" + fmt(c.delta);
        if constexpr (std::is_same_v<T, ScaledSign>) return "sign";
        if constexpr (std::is_same_v<T, TopK>) return "topk:" + std::to_string(c.k);
        if constexpr (std::is_same_v<T, EpsBall>) return "epsball:" + fmt(c.eps);
      },
      spec);
}

SchemeConfig parse_scheme(const std::string& text) {
  SchemeConfig s;
  if (text == "direct") return s;
  s.kind = SchemeKind::ErrorCompensated;
  if (text == "ec:identity") {
    s.weighting = Weighting::Identity;
  } else if (text == "ec:hessian") {
    s.weighting = Weighting::Hessian;
  } else if (text == "ec:diag") {
    s.weighting = Weighting::DiagHessian;
  } else if (text == "ec:bfgs") {
    s.weighting = Weighting::Bfgs;
  } else if (text.rfind("ec:scaled:", 0) == 0) {
    s.weighting = Weighting::Scaled;
    s.alpha = number_or_throw(std::string_view(text).substr(10), "ec:scaled");
    if (!(s.alpha > 0.0 && s.alpha <= 1.0)) throw ConfigError("ec:scaled: alpha must lie in (0, 1]");
  } else {
    throw ConfigError("unknown scheme '" + text +
                      "' (expected direct, ec:identity, ec:scaled:A, ec:hessian, ec:diag or ec:bfgs)");
  }
  return s;
}

std::string to_string(const SchemeConfig& s) {
  if (!s.error_compensated()) return "direct";
  switch (s.weighting) {
    case Weighting::Identity: return "ec:identity";
    case Weighting::Scaled: return "ec:scaled:" + fmt(s.alpha);
    case Weighting::Hessian: return "ec:hessian";
    case Weighting::DiagHessian: return "ec:diag";
    case Weighting::Bfgs: return "ec:bfgs";
  }
  return "ec:?";
}

StepRule parse_step_rule(const std::string& text) {
  using K = StepRule::Kind;
  if (text == "1/L") return {K::OneOverL, 0.0};
  if (text == "2/(mu+L)") return {K::TwoOverMuPlusL, 0.0};
  if (text == "thm4") return {K::Thm4, 0.0};
  if (text == "paper-ls") return {K::PaperLs, 0.0};
  if (text == "paper-robust") return {K::PaperRobust, 0.0};
  if (text.rfind("thm7b:", 0) == 0) {
    const double beta = number_or_throw(std::string_view(text).substr(6), "thm7b");
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("thm7b: beta must lie in (0, 1)");
    return {K::Thm7b, beta};
  }
  if (text.size() > 2 && text.compare(text.size() - 2, 2, "/L") == 0) {
    const double c = number_or_throw(std::string_view(text).substr(0, text.size() - 2), "step rule");
    if (!(c > 0.0)) throw ConfigError("step rule: c in c/L must be positive");
    return {K::ScaledOverL, c};
  }
  const double g = number_or_throw(text, "step rule");
  if (!(g > 0.0)) throw ConfigError("step rule: gamma must be positive");
  return {K::Fixed, g};
}

std::string to_string(const StepRule& r) {
  using K = StepRule::Kind;
  switch (r.kind) {
    case K::OneOverL: return "1/L";
    case K::TwoOverMuPlusL: return "2/(mu+L)";
    case K::ScaledOverL: return fmt(r.param) + "/L";
    case K::Thm4: return "thm4";
    case K::Thm7b: return "thm7b:" + fmt(r.param);
    case K::PaperLs: return "paper-ls";
    case K::PaperRobust: return "paper-robust";
    case K::Fixed: return fmt(r.param);
  }
  return "?";
}

Theorem parse_theorem(const std::string& text) {
  if (text == "thm1") return Theorem::Thm1;
  if (text == "thm3") return Theorem::Thm3;
  if (text == "thm4") return Theorem::Thm4;
  if (text == "thm5") return Theorem::Thm5;
  if (text == "thm6") return Theorem::Thm6;
  if (text == "thm7a") return Theorem::Thm7a;
  if (text == "thm7b") return Theorem::Thm7b;
  throw ConfigError("unknown theorem '" + text + "' (expected thm1, thm3, thm4, thm5, thm6, thm7a, thm7b)");
}

std::string to_string(Theorem t) {
  switch (t) {
    case Theorem::Thm1: return "thm1";
    case Theorem::Thm3: return "thm3";
    case Theorem::Thm4: return "thm4";
    case Theorem::Thm5: return "thm5";
    case Theorem::Thm6: return "thm6";
    case Theorem::Thm7a: return "thm7a";
    case Theorem::Thm7b: return "thm7b";
  }
  return "?";
}

}  // namespace ecgrad
