#pragma once

#include <cstddef>
#include <span>

// Data-parallel inner loops shared by the solvers: dense reductions and the
// elementwise logistic maps.  Every kernel has a scalar reference
// implementation and, on x86-64 with AVX2+FMA, a vectorized variant.  The
// active variant is chosen once at startup from CPU flags (overridable with
// COSTGATE_BACKEND=scalar|avx2 or force_backend) and the two are held to
// agree by the equivalence tests in tests/test_kernels.cpp.
namespace costgate::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
const char* backend_name();
bool avx2_available();

// Test hook: select a backend explicitly.  Throws if unavailable.
void force_backend(Backend b);

// sum_i a[i] * b[i]; spans must have equal length
double dot(std::span<const double> a, std::span<const double> b);

double sum(std::span<const double> a);

// y[i] += alpha * x[i]
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// out[i] = 1 / (1 + exp(-x[i]))
void sigmoid(std::span<const double> x, std::span<double> out);

// out[i] = log(1 + exp(x[i])), overflow-safe for |x| up to at least 1e4
void softplus(std::span<const double> x, std::span<double> out);

// Scalar reference path, provided for oracle/equivalence testing.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void sigmoid(const double* x, double* out, std::size_t n);
void softplus(const double* x, double* out, std::size_t n);
}  // namespace scalar

// Convenience scalar forms used throughout the solvers.
double sigmoid1(double x);
double softplus1(double x);

}  // namespace costgate::kernels
