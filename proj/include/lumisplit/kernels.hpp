#pragma once

// Data-parallel inner loops used by the MLP fields and the image losses.
// Scalar reference kernels always exist; an AVX2+FMA variant is selected at
// runtime when the CPU supports it. Set LUMISPLIT_FORCE_SCALAR=1 to pin the
// reference path (the equivalence tests exercise both).

#include <cstddef>

namespace lumisplit::kernels {

struct Kernels {
    // C[m x n] += A[m x k] * B[k x n], all row-major, contiguous.
    void (*gemm_acc)(const double* A, const double* B, double* C,
                     int m, int k, int n);
    // C[m x n] += A^T[k x m] * B[k x n]  (A stored k x m row-major).
    void (*gemm_at_acc)(const double* A, const double* B, double* C,
                        int k, int m, int n);
    double (*dot)(const double* a, const double* b, size_t n);
    void (*axpy)(double alpha, const double* x, double* y, size_t n);
    double (*sum_sq_diff)(const double* a, const double* b, size_t n);
};

const Kernels& scalar();
const Kernels& active();        // dispatched once, cached
const char* active_name();      // "scalar" or "avx2"

}  // namespace lumisplit::kernels
