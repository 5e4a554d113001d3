// Copyright 2026 The cfrenew Authors
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

#ifndef CFRENEW_PARALLEL_HPP
#define CFRENEW_PARALLEL_HPP

// Fixed-size blocks of sample indices, processed by a pool of threads and
// returned in block order. Block boundaries depend only on the item count, so
// a reduction over the returned vector is identical for any worker count.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cfrenew {

inline unsigned default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

/// Calls fn(begin, end) for consecutive blocks [begin, end) of [0, n) and
/// returns the results in block order.
template <class Fn>
auto map_blocks(std::uint64_t n, std::uint64_t block_size, unsigned workers, Fn&& fn)
    -> std::vector<decltype(fn(std::uint64_t{}, std::uint64_t{}))> {
  using result_t = decltype(fn(std::uint64_t{}, std::uint64_t{}));
  if (block_size == 0) block_size = 1;
  const std::uint64_t blocks = (n + block_size - 1) / block_size;
  std::vector<result_t> out(blocks);
  if (workers == 0) workers = default_workers();
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(blocks, 1)));

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    while (true) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= blocks) return;
      try {
        const std::uint64_t begin = b * block_size;
        out[b] = fn(begin, std::min(n, begin + block_size));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(blocks);
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace cfrenew

#endif  // CFRENEW_PARALLEL_HPP
