#include "costgate/linalg.hpp"

#include <cmath>

#include "costgate/common.hpp"

namespace costgate::linalg {

bool cholesky_solve(std::vector<double> a, std::size_t n,
                    std::span<const double> b, std::span<double> x) {
    // in-place lower Cholesky
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0)) return false;
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / l;
        }
    }
    // forward then back substitution
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * x[k];
        x[i] = s / a[i * n + i];
    }
    for (std::size_t ii = n; ii > 0; --ii) {
        const std::size_t i = ii - 1;
        double s = x[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * x[k];
        x[i] = s / a[i * n + i];
    }
    return true;
}

void spd_solve(const std::vector<double>& a, std::size_t n,
               std::span<const double> b, std::span<double> x) {
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += a[i * n + i];
    double jitter = 0.0;
    for (int attempt = 0; attempt < 40; ++attempt) {
        std::vector<double> aj = a;
        if (jitter > 0.0)
            for (std::size_t i = 0; i < n; ++i) aj[i * n + i] += jitter;
        if (cholesky_solve(std::move(aj), n, b, x)) return;
        jitter = jitter == 0.0 ? 1e-12 * (1.0 + trace / static_cast<double>(n)) : jitter * 10.0;
    }
    fail("spd_solve: factorization failed even with jitter");
}

}  // namespace costgate::linalg
