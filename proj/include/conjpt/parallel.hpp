#pragma once

// Index-parallel loops over independent work items. Results are written by
// index, so output order never depends on scheduling. The serial policy is the
// reference path the tests compare against.

#include <cstddef>
#include <exception>
#include <vector>

namespace conjpt {

enum class Execution { serial, parallel };

/// Caps the OpenMP worker count; n <= 0 restores the runtime default.
void set_thread_count(int n);
int thread_count();

/// Runs body(i) for i in [0, count). Exceptions are captured per index and the
/// one with the lowest index is rethrown after the loop.
template <class Body>
void for_each_index(std::size_t count, Execution exec, Body&& body) {
  if (exec == Execution::serial || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  const auto total = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < total; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace conjpt
