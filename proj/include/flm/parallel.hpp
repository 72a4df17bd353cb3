#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace flm {

enum class Exec { serial, parallel };

/// Caps the OpenMP thread pool used by the parallel kernels. 0 restores the
/// runtime default.
void set_threads(int n);
int thread_count();

namespace detail {
void run_blocks(std::size_t nblocks, Exec exec, void* ctx, void (*fn)(void*, std::size_t));
}

/// Splits [0, n) into fixed-size blocks and runs `body(lo, hi, partial)` once
/// per block. Partials are indexed by block, never shared, so a caller that
/// folds them in block order gets results independent of the thread count.
template <typename Partial, typename Body>
void for_blocks(std::size_t n, std::size_t block_size, std::vector<Partial>& partials, Body&& body,
                Exec exec) {
    const std::size_t nblocks = n == 0 ? 0 : (n + block_size - 1) / block_size;
    partials.resize(nblocks);
    struct Ctx {
        std::size_t n, block_size;
        std::vector<Partial>* partials;
        Body* body;
    } ctx{n, block_size, &partials, &body};
    detail::run_blocks(nblocks, exec, &ctx, [](void* p, std::size_t b) {
        auto& c = *static_cast<Ctx*>(p);
        const std::size_t lo = b * c.block_size;
        const std::size_t hi = std::min(c.n, lo + c.block_size);
        (*c.body)(lo, hi, (*c.partials)[b]);
    });
}

} // namespace flm
