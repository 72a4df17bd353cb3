#include "flm/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace flm {

namespace {
int g_thread_cap = 0;
}

void set_threads(int n) {
    g_thread_cap = n > 0 ? n : 0;
#ifdef _OPENMP
    if (g_thread_cap > 0)
        omp_set_num_threads(g_thread_cap);
#endif
}

int thread_count() {
#ifdef _OPENMP
    return g_thread_cap > 0 ? g_thread_cap : omp_get_max_threads();
#else
    return 1;
#endif
}

namespace detail {

void run_blocks(std::size_t nblocks, Exec exec, void* ctx, void (*fn)(void*, std::size_t)) {
    if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (long long b = 0; b < static_cast<long long>(nblocks); ++b)
            fn(ctx, static_cast<std::size_t>(b));
        return;
#endif
    }
    for (std::size_t b = 0; b < nblocks; ++b)
        fn(ctx, b);
}

} // namespace detail
} // namespace flm
