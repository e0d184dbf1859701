// Copyright 2026 The fedkd Authors
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

#ifndef FEDKD_SRC_PARALLEL_HPP_
#define FEDKD_SRC_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "fedkd/errors.hpp"

namespace fedkd::detail {

// Runs job(i) for i in [0, n) on up to `threads` workers. Each index is
// processed by exactly one worker and results are written by index, so the
// outcome does not depend on scheduling. Failures are collected and
// rethrown together, prefixed with `label i`.
inline void run_indexed(std::size_t n, std::size_t threads, const std::string& label,
                        const std::function<void(std::size_t)>& job) {
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t worker, std::size_t stride) {
    for (std::size_t i = worker; i < n; i += stride) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (std::thread& t : pool) t.join();
  }

  std::string message;
  bool numeric = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    if (!message.empty()) message += "; ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const NumericError& e) {
      numeric = true;
      message += label + " " + std::to_string(i) + ": " + e.what();
    } catch (const std::exception& e) {
      message += label + " " + std::to_string(i) + ": " + e.what();
    }
  }
  if (message.empty()) return;
  if (numeric) throw NumericError(message);
  throw Error(message);
}

}  // namespace fedkd::detail

#endif  // FEDKD_SRC_PARALLEL_HPP_
