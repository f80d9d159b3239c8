#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rwre {

// Resolve the worker count: explicit request > RWRE_WORKERS env var >
// hardware. Always >= 1.
int resolve_workers(int requested);

// Serial reference loop. The OpenMP kernels must match this bit for bit;
// tests and the benchmark compare against it.
template <class F>
void run_indexed_serial(std::int64_t count, F&& fn) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
}

// Dispatch fn(i) for i in [0, count) over `workers` threads. Each index owns
// its output slot and derives its own RNG stream, so the result is identical
// to run_indexed_serial regardless of scheduling.
template <class F>
void run_indexed(std::int64_t count, int workers, F&& fn) {
#ifdef _OPENMP
    if (workers > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(workers)
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
#else
    (void)workers;
#endif
    run_indexed_serial(count, fn);
}

}  // namespace rwre
