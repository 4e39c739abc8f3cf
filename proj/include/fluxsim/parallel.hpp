#pragma once

// Ordered fan-out of independent tasks over a fixed number of threads.

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace fluxsim {

/// Run `tasks` on up to `jobs` threads; results keep input order.
template <typename Result>
std::vector<Result> run_ordered(const std::vector<std::function<Result()>>& tasks, int jobs) {
  std::vector<Result> out(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) out[i] = tasks[i]();
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace fluxsim
