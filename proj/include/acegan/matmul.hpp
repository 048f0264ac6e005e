#pragma once

#include <cstdint>

namespace acegan {

// Dense double-precision kernels used by the layer implementations. All three
// accumulate into C and use a fixed reduction order, so results are
// bit-identical across calls and builds on the same platform.

// C[M x N] += A[M x K] * B[K x N]
void mm_nn_acc(double* C, const double* A, const double* B, int64_t M,
               int64_t K, int64_t N);

// C[M x N] += A[M x D] * B[N x D]^T  (row-by-row dot products)
void mm_nt_acc(double* C, const double* A, const double* B, int64_t M,
               int64_t N, int64_t D);

// C[M x N] += A[K x M]^T * B[K x N]
void mm_tn_acc(double* C, const double* A, const double* B, int64_t K,
               int64_t M, int64_t N);

// dot(a, b) over D elements with a fixed split-accumulator reduction order.
double dot_fixed(const double* a, const double* b, int64_t D);

}  // namespace acegan
