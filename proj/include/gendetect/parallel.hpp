#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gendetect::parallel {

// Process-wide worker count for the OpenMP kernels. 1 disables parallelism.
// Every kernel in this project is required to produce the same bytes for any
// thread count, so this only affects wall time.
void set_threads(int n);
int threads();

// Runs f(i) for i in [0, n). Iterations must write disjoint state.
template <class F>
void for_each_index(std::size_t n, F&& f) {
#ifdef _OPENMP
  const int t = threads();
  if (t != 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(t)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      f(static_cast<std::size_t>(i));
    }
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) f(i);
}

// Runs f(chunk_index, begin, end) over fixed-size chunks of [0, n). The
// decomposition depends only on chunk_size, never on the thread count, so
// per-chunk partial results can be reduced in chunk order to give
// thread-count-invariant sums.
template <class F>
void for_each_chunk(std::size_t n, std::size_t chunk_size, F&& f) {
  const std::size_t chunks = n == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
  for_each_index(chunks, [&](std::size_t c) {
    const std::size_t begin = c * chunk_size;
    const std::size_t end = begin + chunk_size < n ? begin + chunk_size : n;
    f(c, begin, end);
  });
}

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
  return n == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
}

}  // namespace gendetect::parallel
