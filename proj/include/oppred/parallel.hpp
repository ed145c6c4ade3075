#pragma once

#include <cstddef>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace oppred {

// True when the build has OpenMP and more than one thread is available.
inline bool parallel_enabled() {
#if defined(_OPENMP)
    return omp_get_max_threads() > 1;
#else
    return false;
#endif
}

inline int max_threads() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Index-space parallel loop. Work items must be independent and must write
// only to their own slot of any output container, so a parallel run is
// byte-identical to the serial one. `parallel=false` selects the serial
// reference path (used by tests and the benchmark).
template <typename F>
void parallel_for(std::size_t n, F&& body, bool parallel = true) {
#if defined(_OPENMP)
    if (parallel && n > 1 && omp_get_max_threads() > 1) {
        #pragma omp parallel for schedule(dynamic, 1)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            body(static_cast<std::size_t>(i));
        }
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}

} // namespace oppred
