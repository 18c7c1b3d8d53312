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

#ifndef ECGRAD_CLI_CLI_HPP
#define ECGRAD_CLI_CLI_HPP

#include <ostream>

namespace ecgrad::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailed = 1;
inline constexpr int kConfigError = 2;
inline constexpr int kDiverged = 3;

/// Entry point shared by the `ecgrad` binary and the tests.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ecgrad::cli

#endif  // ECGRAD_CLI_CLI_HPP
