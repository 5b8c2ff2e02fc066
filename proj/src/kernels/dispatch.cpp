#include <cstdlib>
#include <string>

#include "paxcast/error.hpp"
#include "paxcast/kernels.hpp"

namespace paxcast::kernels {

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

bool isa_available(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2:
#if defined(PAXCAST_HAVE_AVX2)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(PAXCAST_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const KernelTable& table(Isa isa) {
    if (!isa_available(isa)) {
        throw Error(ErrorKind::InvalidInput, "kernel variant '" + std::string(isa_name(isa)) + "' unavailable");
    }
    switch (isa) {
#if defined(PAXCAST_HAVE_AVX2)
        case Isa::Avx2: return detail::avx2_table;
#endif
#if defined(PAXCAST_HAVE_NEON)
        case Isa::Neon: return detail::neon_table;
#endif
        default: return detail::scalar_table;
    }
}

std::vector<Isa> available_isas() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
        if (isa_available(isa)) out.push_back(isa);
    }
    return out;
}

namespace {

const KernelTable& select() {
    if (const char* env = std::getenv("PAXCAST_ISA")) {
        const std::string want(env);
        for (Isa isa : available_isas()) {
            if (isa_name(isa) == want) return table(isa);
        }
    }
    if (isa_available(Isa::Avx2)) return table(Isa::Avx2);
    if (isa_available(Isa::Neon)) return table(Isa::Neon);
    return detail::scalar_table;
}

}  // namespace

const KernelTable& active() {
    static const KernelTable& chosen = select();
    return chosen;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail("dot: length mismatch");
    return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) fail("axpy: length mismatch");
    active().axpy(alpha, x.data(), y.data(), x.size());
}

void gram(const KernelTable& k, const double* cols, std::size_t n, std::size_t p, double* out) {
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i <= j; ++i) {
            const double v = k.dot(cols + i * n, cols + j * n, n);
            out[i + j * p] = v;
            out[j + i * p] = v;
        }
    }
}

void xty(const KernelTable& k, const double* cols, std::size_t n, std::size_t p, const double* y, double* out) {
    for (std::size_t j = 0; j < p; ++j) out[j] = k.dot(cols + j * n, y, n);
}

void gemv(const KernelTable& k, const double* cols, std::size_t n, std::size_t p, const double* beta, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
    for (std::size_t j = 0; j < p; ++j) k.axpy(beta[j], cols + j * n, out, n);
}

}  // namespace paxcast::kernels
