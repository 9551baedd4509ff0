#include "costgate/kernels.hpp"

#include <cmath>

namespace costgate::kernels {

double sigmoid1(double x) {
    if (x >= 0.0) {
        const double t = std::exp(-x);
        return 1.0 / (1.0 + t);
    }
    const double t = std::exp(x);
    return t / (1.0 + t);
}

double softplus1(double x) {
    // log(1+e^x) = max(x,0) + log1p(e^-|x|)
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void sigmoid(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = sigmoid1(x[i]);
}

void softplus(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = softplus1(x[i]);
}

}  // namespace scalar
}  // namespace costgate::kernels
