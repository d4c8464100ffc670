#include "pbe/simd.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

} // namespace

namespace pbe::simd::avx2 {

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double r = hsum(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

double dot3(const double* a, const double* b, const double* c, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d bc = _mm256_mul_pd(_mm256_loadu_pd(b + i), _mm256_loadu_pd(c + i));
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), bc, acc);
    }
    double r = hsum(acc);
    for (; i < n; ++i) r += a[i] * (b[i] * c[i]);
    return r;
}

double sum(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    double r = hsum(acc);
    for (; i < n; ++i) r += a[i];
    return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void scale(double alpha, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

void hadamard(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

double max_val(const double* a, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 4) {
        __m256d acc = _mm256_loadu_pd(a);
        for (i = 4; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(a + i));
        alignas(32) double lanes[4];
        _mm256_store_pd(lanes, acc);
        m = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
    }
    for (; i < n; ++i) m = std::max(m, a[i]);
    return m;
}

double min_val(const double* a, std::size_t n) {
    double m = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 4) {
        __m256d acc = _mm256_loadu_pd(a);
        for (i = 4; i + 4 <= n; i += 4) acc = _mm256_min_pd(acc, _mm256_loadu_pd(a + i));
        alignas(32) double lanes[4];
        _mm256_store_pd(lanes, acc);
        m = std::min(std::min(lanes[0], lanes[1]), std::min(lanes[2], lanes[3]));
    }
    for (; i < n; ++i) m = std::min(m, a[i]);
    return m;
}

void minmod3(const double* a, const double* b, const double* c, double* out, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d x = _mm256_loadu_pd(a + i);
        __m256d y = _mm256_loadu_pd(b + i);
        __m256d z = _mm256_loadu_pd(c + i);
        __m256d pos = _mm256_and_pd(_mm256_cmp_pd(x, zero, _CMP_GT_OQ),
                                    _mm256_and_pd(_mm256_cmp_pd(y, zero, _CMP_GT_OQ),
                                                  _mm256_cmp_pd(z, zero, _CMP_GT_OQ)));
        __m256d neg = _mm256_and_pd(_mm256_cmp_pd(x, zero, _CMP_LT_OQ),
                                    _mm256_and_pd(_mm256_cmp_pd(y, zero, _CMP_LT_OQ),
                                                  _mm256_cmp_pd(z, zero, _CMP_LT_OQ)));
        __m256d mn = _mm256_min_pd(x, _mm256_min_pd(y, z));
        __m256d mx = _mm256_max_pd(x, _mm256_max_pd(y, z));
        __m256d r = _mm256_blendv_pd(zero, mn, pos);
        r = _mm256_blendv_pd(r, mx, neg);
        _mm256_storeu_pd(out + i, r);
    }
    if (i < n) scalar::minmod3(a + i, b + i, c + i, out + i, n - i);
}

} // namespace pbe::simd::avx2

#endif
