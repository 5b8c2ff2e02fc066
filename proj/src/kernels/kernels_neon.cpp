#include <arm_neon.h>

#include <cmath>

#include "paxcast/kernels.hpp"

namespace paxcast::kernels::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_abs_diff_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

double asym_sq_sum_neon(const double* y, const double* yhat, std::size_t n, double under_weight) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    const float64x2_t one = vdupq_n_f64(1.0);
    const float64x2_t w_under = vdupq_n_f64(under_weight);
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t e = vsubq_f64(vld1q_f64(yhat + i), vld1q_f64(y + i));
        const float64x2_t w = vbslq_f64(vcltq_f64(e, zero), w_under, one);
        acc = vfmaq_f64(acc, vmulq_f64(w, e), e);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) {
        const double e = yhat[i] - y[i];
        s += (e < 0.0 ? under_weight : 1.0) * e * e;
    }
    return s;
}

std::size_t count_within_neon(const double* a, const double* b, std::size_t n, double tol) {
    const float64x2_t vt = vdupq_n_f64(tol);
    std::size_t c = 0;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const uint64x2_t m = vcleq_f64(vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)), vt);
        c += (vgetq_lane_u64(m, 0) ? 1 : 0) + (vgetq_lane_u64(m, 1) ? 1 : 0);
    }
    for (; i < n; ++i) c += std::fabs(a[i] - b[i]) <= tol ? 1 : 0;
    return c;
}

}  // namespace

const KernelTable neon_table{Isa::Neon,        dot_neon,         axpy_neon,
                             sum_abs_diff_neon, asym_sq_sum_neon, count_within_neon};

}  // namespace paxcast::kernels::detail
