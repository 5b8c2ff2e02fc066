#include <cmath>

#include "paxcast/kernels.hpp"

namespace paxcast::kernels::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

double asym_sq_sum_scalar(const double* y, const double* yhat, std::size_t n, double under_weight) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = yhat[i] - y[i];
        s += (e < 0.0 ? under_weight : 1.0) * e * e;
    }
    return s;
}

std::size_t count_within_scalar(const double* a, const double* b, std::size_t n, double tol) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) c += std::fabs(a[i] - b[i]) <= tol ? 1 : 0;
    return c;
}

}  // namespace

const KernelTable scalar_table{Isa::Scalar,        dot_scalar,         axpy_scalar,
                               sum_abs_diff_scalar, asym_sq_sum_scalar, count_within_scalar};

}  // namespace paxcast::kernels::detail
