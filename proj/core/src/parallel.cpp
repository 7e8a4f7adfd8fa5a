#include "condcov/parallel.hpp"

#include <cstdlib>
#include <string>

#include <tbb/global_control.h>

namespace condcov {

std::size_t thread_count_from_env() {
  const char* raw = std::getenv("CONDCOV_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  try {
    const long v = std::stol(raw);
    return v > 0 ? static_cast<std::size_t>(v) : 0;
  } catch (const std::exception&) {
    return 0;
  }
}

ThreadLimit::ThreadLimit(std::size_t threads) {
  if (threads > 0) {
    control_ = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                                     threads);
  }
}

ThreadLimit::~ThreadLimit() = default;

}  // namespace condcov
