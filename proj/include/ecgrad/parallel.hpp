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

#ifndef ECGRAD_PARALLEL_HPP
#define ECGRAD_PARALLEL_HPP

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace ecgrad {

/// Worker-thread cap from ECGRAD_THREADS (default 1).
inline std::size_t threads_from_env() {
  const char* env = std::getenv("ECGRAD_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    const long v = std::stol(env);
    return v < 1 ? 1 : static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    return 1;
  }
}

/// Runs fn(i) for i in [0, n) on up to `threads` threads. Each index must
/// only touch state it owns. The first exception (lowest index) is rethrown.
template <typename Fn>
void for_each_worker(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  auto body = [&](std::size_t t) {
    for (std::size_t i = t; i < n; i += threads) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(body, t);
    body(0);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace ecgrad

#endif  // ECGRAD_PARALLEL_HPP
