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

#ifndef ECGRAD_CLI_SETTINGS_HPP
#define ECGRAD_CLI_SETTINGS_HPP

#include <map>
#include <string>
#include <vector>

namespace ecgrad::cli {

/// Flat settings keyed by "section.key". Every key has a default; files and
/// flags may only set known keys.
class Settings {
 public:
  Settings();

  /// Parses `[section]` headers and `key = value` lines; `#` and `;` start comments.
  void merge_text(const std::string& text, const std::string& origin);
  void merge_file(const std::string& path);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  bool is_set(const std::string& key) const { return !get(key).empty(); }
  double number(const std::string& key) const;
  long long integer(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;

  /// Re-loadable text with every key, grouped by section.
  std::string resolved() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Built-in experiment presets, as settings text.
const std::map<std::string, std::string>& presets();

}  // namespace ecgrad::cli

#endif  // ECGRAD_CLI_SETTINGS_HPP
