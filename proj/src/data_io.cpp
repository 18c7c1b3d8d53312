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

#include "ecgrad/data_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>

namespace ecgrad {
namespace {

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_index(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

LibsvmData parse_libsvm(std::istream& in, std::optional<std::int64_t> dim_hint) {
  if (dim_hint && *dim_hint < 0) throw ConfigError("parse_libsvm: negative dimension hint");
  LibsvmData data;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto tokens = split_ws(view);
    if (tokens.empty()) continue;

    auto fail = [&](const std::string& what) {
      throw ParseError(what, lineno);
    };
    LibsvmRecord rec;
    if (!parse_double(tokens[0], rec.label)) fail("malformed label '" + std::string(tokens[0]) + "'");
    if (!std::isfinite(rec.label)) fail("non-finite label");
    std::int64_t prev = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto tok = tokens[t];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) fail("malformed token '" + std::string(tok) + "'");
      std::int64_t idx = 0;
      double v = 0.0;
      if (!parse_index(tok.substr(0, colon), idx)) fail("malformed index in '" + std::string(tok) + "'");
      if (idx < 1) fail("index must be a positive integer, got " + std::to_string(idx));
      if (!parse_double(tok.substr(colon + 1), v)) fail("malformed value in '" + std::string(tok) + "'");
      if (!std::isfinite(v)) fail("non-finite value at index " + std::to_string(idx));
      if (idx <= prev) fail("non-increasing index " + std::to_string(idx));
      if (dim_hint && idx > *dim_hint)
        fail("index " + std::to_string(idx) + " exceeds dimension " + std::to_string(*dim_hint));
      prev = idx;
      rec.features.emplace_back(idx, v);
    }
    data.dim = std::max(data.dim, prev);
    data.records.push_back(std::move(rec));
  }
  if (dim_hint) data.dim = *dim_hint;
  return data;
}

LibsvmData read_libsvm_file(const std::string& path, std::optional<std::int64_t> dim_hint) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return parse_libsvm(in, dim_hint);
}

void serialize_libsvm(std::ostream& out, const std::vector<LibsvmRecord>& records) {
  for (const auto& r : records) {
    out << fmt17(r.label);
    for (const auto& [idx, v] : r.features) out << ' ' << idx << ':' << fmt17(v);
    out << '\n';
  }
}

std::vector<LibsvmRecord> normalize_samples(std::vector<LibsvmRecord> records) {
  for (auto& r : records) {
    double sq = 0.0;
    for (const auto& f : r.features) sq += f.second * f.second;
    const double n = std::sqrt(sq);
    if (n > 0.0)
      for (auto& f : r.features) f.second /= n;
  }
  return records;
}

}  // namespace ecgrad
