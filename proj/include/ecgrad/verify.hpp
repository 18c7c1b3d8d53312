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

#ifndef ECGRAD_VERIFY_HPP
#define ECGRAD_VERIFY_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace ecgrad {

/// Outcome of one numerical check inside a suite.
struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  /// The measured quantity and the threshold it was held against.
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::size_t threads = 1;
  /// Test hook: deliberately breaks the quadratic-identity suite so the
  /// harness can be checked for a failing exit status.
  bool inject_fault = false;
};

/// Suite names in acceptance order.
std::vector<std::string> suite_names();

/// Runs a named suite. Throws ConfigError for unknown names.
std::vector<CheckResult> run_suite(const std::string& name, const VerifyOptions& options = {});

/// One JSON object per line, no trailing newline.
std::string to_json_line(const CheckResult& r);

}  // namespace ecgrad

#endif  // ECGRAD_VERIFY_HPP
