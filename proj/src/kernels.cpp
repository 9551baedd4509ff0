#include "costgate/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "costgate/common.hpp"
#include "kernels_impl.hpp"

namespace costgate::kernels {

namespace {

const KernelTable& scalar_table() {
    static const KernelTable t{scalar::dot, scalar::sum, scalar::axpy,
                               scalar::sigmoid, scalar::softplus};
    return t;
}

struct Dispatch {
    const KernelTable* table;
    Backend backend;
};

bool cpu_has_avx2() {
#if COSTGATE_HAVE_AVX2_BUILD
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Dispatch initial_dispatch() {
    const char* env = std::getenv("COSTGATE_BACKEND");
    if (env != nullptr && std::strcmp(env, "scalar") == 0)
        return {&scalar_table(), Backend::scalar};
#if COSTGATE_HAVE_AVX2_BUILD
    if (cpu_has_avx2() && !(env != nullptr && std::strcmp(env, "avx2") != 0))
        return {&avx2_table(), Backend::avx2};
#endif
    return {&scalar_table(), Backend::scalar};
}

Dispatch& dispatch() {
    static Dispatch d = initial_dispatch();
    return d;
}

}  // namespace

Backend active_backend() { return dispatch().backend; }

const char* backend_name() {
    return dispatch().backend == Backend::avx2 ? "avx2" : "scalar";
}

bool avx2_available() { return cpu_has_avx2(); }

void force_backend(Backend b) {
    if (b == Backend::scalar) {
        dispatch() = {&scalar_table(), Backend::scalar};
        return;
    }
#if COSTGATE_HAVE_AVX2_BUILD
    if (cpu_has_avx2()) {
        dispatch() = {&avx2_table(), Backend::avx2};
        return;
    }
#endif
    fail("avx2 backend requested but not available on this CPU");
}

double dot(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "dot: length mismatch");
    return dispatch().table->dot(a.data(), b.data(), a.size());
}

double sum(std::span<const double> a) {
    return dispatch().table->sum(a.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    require(x.size() == y.size(), "axpy: length mismatch");
    dispatch().table->axpy(alpha, x.data(), y.data(), x.size());
}

void sigmoid(std::span<const double> x, std::span<double> out) {
    require(x.size() == out.size(), "sigmoid: length mismatch");
    dispatch().table->sigmoid(x.data(), out.data(), x.size());
}

void softplus(std::span<const double> x, std::span<double> out) {
    require(x.size() == out.size(), "softplus: length mismatch");
    dispatch().table->softplus(x.data(), out.data(), x.size());
}

}  // namespace costgate::kernels
