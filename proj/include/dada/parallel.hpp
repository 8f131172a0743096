#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace dada {

// Runs task(0..n_tasks-1) on up to n_workers threads. Tasks must be
// independent and write only to their own slots; any ordering of execution
// must give the same result (seeds derive from task identity, not schedule).
inline void parallel_for(int n_tasks, int n_workers,
                         const std::function<void(int)>& task) {
  if (n_tasks <= 0) return;
  n_workers = std::max(1, std::min(n_workers, n_tasks));
  if (n_workers == 1) {
    for (int i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1))
        task(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace dada
