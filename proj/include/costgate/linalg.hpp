#pragma once

#include <span>
#include <vector>

namespace costgate::linalg {

// Solve A x = b for symmetric positive definite A (row-major n x n) in place
// via Cholesky.  Returns false if the factorization hits a non-positive
// pivot; callers add jitter and retry.
bool cholesky_solve(std::vector<double> a, std::size_t n,
                    std::span<const double> b, std::span<double> x);

// Robust wrapper: adds exponentially growing diagonal jitter until the
// factorization succeeds.
void spd_solve(const std::vector<double>& a, std::size_t n,
               std::span<const double> b, std::span<double> x);

}  // namespace costgate::linalg
