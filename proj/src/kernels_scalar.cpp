#include "lumisplit/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace lumisplit::kernels {

namespace {

void gemm_acc_scalar(const double* A, const double* B, double* C,
                     int m, int k, int n) {
    // k innermost-broadcast order so the SIMD variant accumulates in the
    // same k sequence per output element.
    for (int i = 0; i < m; ++i) {
        const double* a = A + static_cast<size_t>(i) * k;
        double* c = C + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            double av = a[p];
            const double* b = B + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

void gemm_at_acc_scalar(const double* A, const double* B, double* C,
                        int k, int m, int n) {
    for (int p = 0; p < k; ++p) {
        const double* a = A + static_cast<size_t>(p) * m;
        const double* b = B + static_cast<size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            double av = a[i];
            double* c = C + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

double dot_scalar(const double* a, const double* b, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq_diff_scalar(const double* a, const double* b, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

const Kernels kScalar = {gemm_acc_scalar, gemm_at_acc_scalar, dot_scalar,
                         axpy_scalar, sum_sq_diff_scalar};

}  // namespace

const Kernels& scalar() { return kScalar; }

#if defined(__x86_64__)
const Kernels& avx2();  // kernels_avx2.cpp
bool avx2_supported();
#endif

const Kernels& active() {
    static const Kernels* chosen = [] {
        const char* force = std::getenv("LUMISPLIT_FORCE_SCALAR");
        if (force && force[0] == '1') return &kScalar;
#if defined(__x86_64__)
        if (avx2_supported()) return &avx2();
#endif
        return &kScalar;
    }();
    return *chosen;
}

const char* active_name() {
    return &active() == &kScalar ? "scalar" : "avx2";
}

}  // namespace lumisplit::kernels
