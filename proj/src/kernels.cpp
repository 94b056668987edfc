#include "fbac/kernels.hpp"

namespace fbac::kernels {

namespace {
bool g_parallel = true;
}

bool parallel_enabled() { return g_parallel; }
void set_parallel(bool on) { g_parallel = on; }

int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace fbac::kernels
