#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qtrack {

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Caps the OpenMP thread pool; n <= 0 leaves the runtime default in place.
inline void set_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

}  // namespace qtrack
