/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kfusion {

// Runs fn(worker, begin, end) over [0, n) in blocks pulled from a shared
// counter. Results must be written per index so that the outcome does not
// depend on which worker handled which block. The first exception thrown by
// any worker is rethrown after all workers join.
template <typename Fn>
void parallel_for_blocks(std::size_t n, unsigned workers, Fn&& fn, std::size_t block = 1024) {
  if (n == 0) return;
  workers = std::max(1u, workers);
  if (workers == 1 || n <= block) {
    fn(0u, std::size_t{0}, n);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto body = [&](unsigned w) {
    try {
      while (true) {
        std::size_t begin = next.fetch_add(block);
        if (begin >= n) break;
        fn(w, begin, std::min(n, begin + block));
      }
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!error) error = std::current_exception();
    }
  };
  unsigned spawned = static_cast<unsigned>(std::min<std::size_t>(workers, (n + block - 1) / block));
  std::vector<std::thread> threads;
  threads.reserve(spawned - 1);
  for (unsigned w = 1; w < spawned; ++w) threads.emplace_back(body, w);
  body(0);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace kfusion
