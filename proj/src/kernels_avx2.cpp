#if defined(__x86_64__)

#include "lumisplit/kernels.hpp"

#include <immintrin.h>

namespace lumisplit::kernels {

namespace {

__attribute__((target("avx2,fma")))
void gemm_acc_avx2(const double* A, const double* B, double* C,
                   int m, int k, int n) {
    int n4 = n & ~3;
    for (int i = 0; i < m; ++i) {
        const double* a = A + static_cast<size_t>(i) * k;
        double* c = C + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            __m256d av = _mm256_set1_pd(a[p]);
            const double* b = B + static_cast<size_t>(p) * n;
            int j = 0;
            for (; j < n4; j += 4) {
                __m256d cv = _mm256_loadu_pd(c + j);
                cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + j), cv);
                _mm256_storeu_pd(c + j, cv);
            }
            for (; j < n; ++j) c[j] += a[p] * b[j];
        }
    }
}

__attribute__((target("avx2,fma")))
void gemm_at_acc_avx2(const double* A, const double* B, double* C,
                      int k, int m, int n) {
    int n4 = n & ~3;
    for (int p = 0; p < k; ++p) {
        const double* a = A + static_cast<size_t>(p) * m;
        const double* b = B + static_cast<size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            __m256d av = _mm256_set1_pd(a[i]);
            double* c = C + static_cast<size_t>(i) * n;
            int j = 0;
            for (; j < n4; j += 4) {
                __m256d cv = _mm256_loadu_pd(c + j);
                cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + j), cv);
                _mm256_storeu_pd(c + j, cv);
            }
            for (; j < n; ++j) c[j] += a[i] * b[j];
        }
    }
}

__attribute__((target("avx2,fma")))
double dot_avx2(const double* a, const double* b, size_t n) {
    size_t n4 = n & ~size_t(3);
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i < n4; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double lanes[4];
    _mm256_storeu_pd(lanes, acc);
    double s = ((lanes[0] + lanes[1]) + lanes[2]) + lanes[3];
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

__attribute__((target("avx2,fma")))
void axpy_avx2(double alpha, const double* x, double* y, size_t n) {
    size_t n4 = n & ~size_t(3);
    __m256d av = _mm256_set1_pd(alpha);
    size_t i = 0;
    for (; i < n4; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

__attribute__((target("avx2,fma")))
double sum_sq_diff_avx2(const double* a, const double* b, size_t n) {
    size_t n4 = n & ~size_t(3);
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i < n4; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double lanes[4];
    _mm256_storeu_pd(lanes, acc);
    double s = ((lanes[0] + lanes[1]) + lanes[2]) + lanes[3];
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

const Kernels kAvx2 = {gemm_acc_avx2, gemm_at_acc_avx2, dot_avx2,
                       axpy_avx2, sum_sq_diff_avx2};

}  // namespace

const Kernels& avx2() { return kAvx2; }

bool avx2_supported() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

}  // namespace lumisplit::kernels

#endif  // __x86_64__
