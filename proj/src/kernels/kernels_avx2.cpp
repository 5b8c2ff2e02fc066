// Compiled with -mavx2 -mfma; only reached through the runtime dispatcher.
#include <immintrin.h>

#include <cmath>

#include "paxcast/kernels.hpp"

namespace paxcast::kernels::detail {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d abs_pd(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i))));
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

double asym_sq_sum_avx2(const double* y, const double* yhat, std::size_t n, double under_weight) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d w_under = _mm256_set1_pd(under_weight);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d e = _mm256_sub_pd(_mm256_loadu_pd(yhat + i), _mm256_loadu_pd(y + i));
        const __m256d under = _mm256_cmp_pd(e, zero, _CMP_LT_OQ);
        const __m256d w = _mm256_blendv_pd(one, w_under, under);
        acc = _mm256_fmadd_pd(_mm256_mul_pd(w, e), e, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double e = yhat[i] - y[i];
        s += (e < 0.0 ? under_weight : 1.0) * e * e;
    }
    return s;
}

std::size_t count_within_avx2(const double* a, const double* b, std::size_t n, double tol) {
    const __m256d vt = _mm256_set1_pd(tol);
    std::size_t c = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        const int mask = _mm256_movemask_pd(_mm256_cmp_pd(d, vt, _CMP_LE_OQ));
        c += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(mask)));
    }
    for (; i < n; ++i) c += std::fabs(a[i] - b[i]) <= tol ? 1 : 0;
    return c;
}

}  // namespace

const KernelTable avx2_table{Isa::Avx2,        dot_avx2,         axpy_avx2,
                             sum_abs_diff_avx2, asym_sq_sum_avx2, count_within_avx2};

}  // namespace paxcast::kernels::detail
