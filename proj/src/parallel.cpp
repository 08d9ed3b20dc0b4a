#include "gendetect/parallel.hpp"

#include <atomic>

namespace gendetect::parallel {

namespace {
std::atomic<int> g_threads{1};
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n <= 0) n = omp_get_max_threads();
#else
  if (n <= 0) n = 1;
#endif
  g_threads.store(n, std::memory_order_relaxed);
}

int threads() { return g_threads.load(std::memory_order_relaxed); }

}  // namespace gendetect::parallel
