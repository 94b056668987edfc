#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fbac::kernels {

using Index = std::int64_t;

/// Runtime switch between the OpenMP kernels and the serial reference path.
/// Tests flip this to compare the two implementations on identical inputs.
bool parallel_enabled();
void set_parallel(bool on);

/// Number of threads the parallel path would use (1 without OpenMP).
int thread_count();

/// Fixed chunk length for deterministic reductions. Partial sums are formed
/// per chunk in index order and combined in chunk order, so the result is
/// independent of the thread count and identical across runs.
inline constexpr Index kChunk = 8192;

/// Serial reference sum: plain left-to-right fold over the index range.
/// This fixed-order reduction is the arbiter the parallel path is tested
/// against (agreement within 1e-12 relative).
template <class F>
double sum_serial(Index n, F&& f) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += f(i);
    return s;
}

/// Deterministic chunked sum. With OpenMP the chunks are evaluated in
/// parallel; the chunk partials are always combined serially in chunk order.
template <class F>
double sum(Index n, F&& f) {
    if (!parallel_enabled() || n < 2 * kChunk) return sum_serial(n, f);
    const Index nChunks = (n + kChunk - 1) / kChunk;
    std::vector<double> partial(static_cast<size_t>(nChunks), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Index c = 0; c < nChunks; ++c) {
        const Index b = c * kChunk;
        const Index e = std::min(n, b + kChunk);
        double s = 0.0;
        for (Index i = b; i < e; ++i) s += f(i);
        partial[static_cast<size_t>(c)] = s;
    }
    double s = 0.0;
    for (double p : partial) s += p;
    return s;
}

/// Maximum of f over [0,n). Order-independent, so the parallel and serial
/// paths agree bitwise.
template <class F>
double max(Index n, F&& f) {
    double m = -std::numeric_limits<double>::infinity();
    if (!parallel_enabled()) {
        for (Index i = 0; i < n; ++i) m = std::max(m, f(i));
        return m;
    }
#ifdef _OPENMP
#pragma omp parallel
    {
        double local = -std::numeric_limits<double>::infinity();
#pragma omp for schedule(static) nowait
        for (Index i = 0; i < n; ++i) local = std::max(local, f(i));
#pragma omp critical
        m = std::max(m, local);
    }
#else
    for (Index i = 0; i < n; ++i) m = std::max(m, f(i));
#endif
    return m;
}

/// Pointwise map over [0,n). No reduction, so results are bitwise identical
/// between the serial and parallel paths.
template <class F>
void for_each(Index n, F&& f) {
#ifdef _OPENMP
    if (parallel_enabled()) {
#pragma omp parallel for schedule(static)
        for (Index i = 0; i < n; ++i) f(i);
        return;
    }
#endif
    for (Index i = 0; i < n; ++i) f(i);
}

} // namespace fbac::kernels
