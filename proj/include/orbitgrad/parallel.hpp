#ifndef ORBITGRAD_PARALLEL_HPP
#define ORBITGRAD_PARALLEL_HPP

#include <cstddef>
#include <exception>

namespace orbitgrad {

/// Parallel runs the OpenMP kernel; Serial runs the reference loop. Both produce
/// bit-identical results because every work item owns a derived random stream.
enum class Execution { Parallel, Serial };

/// Run body(i) for i in [0, n) across OpenMP threads. The first exception thrown by any
/// iteration is rethrown on the calling thread once the loop finishes.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::exception_ptr error;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(orbitgrad_parallel_for_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

/// Reference loop with the same contract, kept for checking the parallel paths.
template <class Body>
void serial_for(std::size_t n, Body&& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

template <class Body>
void for_each_index(Execution exec, std::size_t n, Body&& body) {
  if (exec == Execution::Parallel) {
    parallel_for(n, body);
  } else {
    serial_for(n, body);
  }
}

}  // namespace orbitgrad

#endif  // ORBITGRAD_PARALLEL_HPP
