#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace koopman {

/// Reads KOOPMAN_THREADS (if set and positive) and caps the OpenMP team size.
/// Returns the thread count in effect.
int configure_threads_from_env();

int max_threads();

/// Runs body(i) for i in [0, count) across OpenMP threads. Each index writes
/// only its own output slot, so results are independent of scheduling. If any
/// iteration throws, the exception of the lowest failing index is rethrown
/// after the loop.
template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
  std::vector<std::exception_ptr> errors(count);
  const long n = static_cast<long>(count);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace koopman
