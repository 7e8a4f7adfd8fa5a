#pragma once

#include <cstddef>
#include <memory>
#include <utility>

#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace condcov {

/// Runs body(i) for i in [0, n). Callers write results into slot i, so the
/// outcome never depends on scheduling.
template <typename Body>
void parallel_for(std::size_t n, Body&& body, std::size_t grain = 1) {
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n, grain),
                    [&](const tbb::blocked_range<std::size_t>& r) {
                      for (std::size_t i = r.begin(); i != r.end(); ++i) body(i);
                    });
}

/// Thread count from CONDCOV_THREADS, or 0 (library default) when unset.
std::size_t thread_count_from_env();

/// Caps worker threads for its lifetime; 0 leaves the default in place.
class ThreadLimit {
 public:
  explicit ThreadLimit(std::size_t threads);
  ~ThreadLimit();
  ThreadLimit(const ThreadLimit&) = delete;
  ThreadLimit& operator=(const ThreadLimit&) = delete;

 private:
  std::unique_ptr<tbb::global_control> control_;
};

/// Runs f() on `threads` workers (0 = library default). The count is honoured
/// even above the hardware concurrency.
template <typename F>
decltype(auto) with_threads(std::size_t threads, F&& f) {
  if (threads == 0) return f();
  ThreadLimit limit(threads);
  tbb::task_arena arena(static_cast<int>(threads));
  return arena.execute(std::forward<F>(f));
}

}  // namespace condcov
