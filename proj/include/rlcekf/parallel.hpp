#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace rlcekf {

/// Calls body(i) for i in [0, n), distributing iterations over OpenMP threads
/// when `parallel` is set. An exception thrown by any iteration is rethrown
/// after the loop; when several iterations throw, the lowest index wins so
/// serial and parallel execution report the same error.
template <class Body>
void parallel_for(std::size_t n, Body&& body, bool parallel = true) {
  if (!parallel || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace rlcekf
