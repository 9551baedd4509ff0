// AVX2/FMA kernel variants.  This translation unit is compiled with
// -mavx2 -mfma; nothing here may be called unless the CPU reports both
// features (the dispatcher checks at startup).

#include "kernels_impl.hpp"

#if COSTGATE_HAVE_AVX2_BUILD

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace costgate::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// exp for 4 doubles, inputs clamped to [-708, 708].  Cody-Waite reduction
// x = n*ln2 + r, |r| <= ln2/2, then a degree-13 Taylor polynomial for e^r
// and exponent-field scaling by 2^n.  Relative error a few ulp, which the
// equivalence tests pin down against std::exp.
inline __m256d exp_pd(__m256d x) {
    const __m256d hi_clip = _mm256_set1_pd(708.0);
    const __m256d lo_clip = _mm256_set1_pd(-708.0);
    x = _mm256_min_pd(hi_clip, _mm256_max_pd(lo_clip, x));

    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-1);
    const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
    r = _mm256_fnmadd_pd(n, ln2_lo, r);

    // sum_{k=0..13} r^k / k!
    __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);  // 1/13!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

    // 2^n through the exponent field; n in [-1022, 1023] after the clamp
    const __m128i n32 = _mm256_cvtpd_epi32(n);
    const __m256i n64 = _mm256_cvtepi32_epi64(n32);
    const __m256i bits = _mm256_slli_epi64(
        _mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

// log(1+t) for t in [0,1]: atanh series in s = t/(2+t), s <= 1/3.
// No 1+t rounding step, so relative accuracy holds for tiny t as well.
inline __m256d log1p01_pd(__m256d t) {
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d s = _mm256_div_pd(t, _mm256_add_pd(two, t));
    const __m256d s2 = _mm256_mul_pd(s, s);
    __m256d p = _mm256_set1_pd(1.0 / 27.0);
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 25.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 23.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 21.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 19.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 17.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 15.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 13.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 11.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 9.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 7.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 5.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 3.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0));
    return _mm256_mul_pd(_mm256_add_pd(s, s), p);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void sigmoid_avx2(const double* x, double* out, std::size_t n) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        const __m256d av = _mm256_andnot_pd(sign_mask, v);
        const __m256d t = exp_pd(_mm256_sub_pd(zero, av));
        const __m256d denom = _mm256_add_pd(one, t);
        const __m256d pos = _mm256_div_pd(one, denom);
        const __m256d neg = _mm256_div_pd(t, denom);
        const __m256d is_neg = _mm256_cmp_pd(v, zero, _CMP_LT_OQ);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(pos, neg, is_neg));
    }
    for (; i < n; ++i) {
        const double t = std::exp(-std::fabs(x[i]));
        out[i] = x[i] >= 0.0 ? 1.0 / (1.0 + t) : t / (1.0 + t);
    }
}

void softplus_avx2(const double* x, double* out, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        const __m256d av = _mm256_andnot_pd(sign_mask, v);
        const __m256d t = exp_pd(_mm256_sub_pd(zero, av));
        const __m256d res = _mm256_add_pd(_mm256_max_pd(v, zero), log1p01_pd(t));
        _mm256_storeu_pd(out + i, res);
    }
    for (; i < n; ++i) {
        const double v = x[i];
        out[i] = (v > 0.0 ? v : 0.0) + std::log1p(std::exp(-std::fabs(v)));
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable t{dot_avx2, sum_avx2, axpy_avx2, sigmoid_avx2, softplus_avx2};
    return t;
}

}  // namespace costgate::kernels

#endif  // COSTGATE_HAVE_AVX2_BUILD
