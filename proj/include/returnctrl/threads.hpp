#pragma once

#include <cstdlib>
#ifdef _OPENMP
#include <omp.h>
#endif

namespace returnctrl {

// Worker count for parallel regions: the OpenMP maximum, capped by the
// RETURNCTRL_THREADS environment variable when set.
inline int worker_count() {
  int n = 1;
#ifdef _OPENMP
  n = omp_get_max_threads();
#endif
  if (const char* env = std::getenv("RETURNCTRL_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1 && cap < n) n = cap;
  }
  return n;
}

}  // namespace returnctrl
