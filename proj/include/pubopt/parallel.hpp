#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#include <omp.h>

namespace pubopt {

/// 0 means "OpenMP default"; negative values are treated as 1.
inline int effective_threads(int requested) {
  if (requested == 0) return omp_get_max_threads();
  return requested < 1 ? 1 : requested;
}

/// Runs body(i) for i in [0, n) over `threads` workers. Each index writes
/// only its own slot, so results do not depend on the schedule. The first
/// exception (lowest index) is rethrown after the loop.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(effective_threads(threads))
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Serial counterpart with the same contract; the reference used in tests
/// and benchmarks.
template <typename Body>
void serial_for(std::size_t n, Body&& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace pubopt
