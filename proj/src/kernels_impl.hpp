#pragma once

#include <cstddef>

// Internal: per-backend entry points wired up by the dispatcher.
namespace costgate::kernels {

struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*sigmoid)(const double*, double*, std::size_t);
    void (*softplus)(const double*, double*, std::size_t);
};

#if defined(__x86_64__) || defined(_M_X64)
#define COSTGATE_HAVE_AVX2_BUILD 1
const KernelTable& avx2_table();
#else
#define COSTGATE_HAVE_AVX2_BUILD 0
#endif

}  // namespace costgate::kernels
