#pragma once

// Data-parallel inner loops used by the model fit, prediction and the
// evaluation metrics. Every kernel has a scalar reference implementation; the
// AVX2 and NEON variants are selected at runtime and must agree with it up to
// floating-point reassociation (exactly, for count_within).

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace paxcast::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
    Isa isa;
    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // sum_i |a[i] - b[i]|
    double (*sum_abs_diff)(const double* a, const double* b, std::size_t n);
    // sum_i w_i e_i^2 with e_i = yhat[i] - y[i], w_i = under_weight if e_i < 0 else 1
    double (*asym_sq_sum)(const double* y, const double* yhat, std::size_t n, double under_weight);
    // #{i : |a[i] - b[i]| <= tol}
    std::size_t (*count_within)(const double* a, const double* b, std::size_t n, double tol);
};

/// True when the variant is compiled in and the CPU supports it.
bool isa_available(Isa isa);

/// Kernel table for a specific variant; throws when unavailable.
const KernelTable& table(Isa isa);

/// Variant chosen at startup: the widest available, unless the environment
/// variable PAXCAST_ISA names another one (`scalar`, `avx2`, `neon`).
const KernelTable& active();

std::vector<Isa> available_isas();

// Convenience wrappers over active().
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// Upper triangle (and mirrored lower) of X^T X for a column-major n x p
/// matrix `cols` (column j starts at cols + j * n). `out` is p x p column-major.
void gram(const KernelTable& k, const double* cols, std::size_t n, std::size_t p, double* out);

/// X^T y for the same layout.
void xty(const KernelTable& k, const double* cols, std::size_t n, std::size_t p, const double* y, double* out);

/// out = X * beta for the same layout; out has length n.
void gemv(const KernelTable& k, const double* cols, std::size_t n, std::size_t p, const double* beta, double* out);

namespace detail {
extern const KernelTable scalar_table;
#if defined(PAXCAST_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
#if defined(PAXCAST_HAVE_NEON)
extern const KernelTable neon_table;
#endif
}  // namespace detail

}  // namespace paxcast::kernels
