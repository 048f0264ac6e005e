#include "acegan/matmul.hpp"

#include <algorithm>

namespace acegan {

namespace {
constexpr int64_t kJBlock = 240;  // columns of C kept hot in L1
constexpr int64_t kKBlock = 128;  // rows of B per pass
}  // namespace

void mm_nn_acc(double* C, const double* A, const double* B, int64_t M,
               int64_t K, int64_t N) {
    for (int64_t j0 = 0; j0 < N; j0 += kJBlock) {
        const int64_t jw = std::min(kJBlock, N - j0);
        for (int64_t k0 = 0; k0 < K; k0 += kKBlock) {
            const int64_t kw = std::min(kKBlock, K - k0);
            int64_t i = 0;
            for (; i + 4 <= M; i += 4) {
                double* c0 = C + (i + 0) * N + j0;
                double* c1 = C + (i + 1) * N + j0;
                double* c2 = C + (i + 2) * N + j0;
                double* c3 = C + (i + 3) * N + j0;
                for (int64_t k = k0; k < k0 + kw; ++k) {
                    const double a0 = A[(i + 0) * K + k];
                    const double a1 = A[(i + 1) * K + k];
                    const double a2 = A[(i + 2) * K + k];
                    const double a3 = A[(i + 3) * K + k];
                    const double* b = B + k * N + j0;
                    for (int64_t j = 0; j < jw; ++j) {
                        const double bj = b[j];
                        c0[j] += a0 * bj;
                        c1[j] += a1 * bj;
                        c2[j] += a2 * bj;
                        c3[j] += a3 * bj;
                    }
                }
            }
            for (; i < M; ++i) {
                double* c = C + i * N + j0;
                for (int64_t k = k0; k < k0 + kw; ++k) {
                    const double a = A[i * K + k];
                    const double* b = B + k * N + j0;
                    for (int64_t j = 0; j < jw; ++j) c[j] += a * b[j];
                }
            }
        }
    }
}

namespace {
// dot(a, b) with eight split accumulators: vectorizable without changing the
// (fixed) reduction order from run to run.
inline double dot_split8(const double* a, const double* b, int64_t D) {
    double s[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    int64_t d = 0;
    for (; d + 8 <= D; d += 8) {
        s[0] += a[d + 0] * b[d + 0];
        s[1] += a[d + 1] * b[d + 1];
        s[2] += a[d + 2] * b[d + 2];
        s[3] += a[d + 3] * b[d + 3];
        s[4] += a[d + 4] * b[d + 4];
        s[5] += a[d + 5] * b[d + 5];
        s[6] += a[d + 6] * b[d + 6];
        s[7] += a[d + 7] * b[d + 7];
    }
    double tail = 0.0;
    for (; d < D; ++d) tail += a[d] * b[d];
    const double s01 = s[0] + s[1], s23 = s[2] + s[3];
    const double s45 = s[4] + s[5], s67 = s[6] + s[7];
    return ((s01 + s23) + (s45 + s67)) + tail;
}
}  // namespace

void mm_nt_acc(double* C, const double* A, const double* B, int64_t M,
               int64_t N, int64_t D) {
    for (int64_t i = 0; i < M; ++i) {
        const double* a = A + i * D;
        for (int64_t j = 0; j < N; ++j)
            C[i * N + j] += dot_split8(a, B + j * D, D);
    }
}

double dot_fixed(const double* a, const double* b, int64_t D) {
    return dot_split8(a, b, D);
}

void mm_tn_acc(double* C, const double* A, const double* B, int64_t K,
               int64_t M, int64_t N) {
    // Four k at a time so each C row is loaded and stored once per group of
    // four rank-1 updates instead of once per update.
    int64_t k0 = 0;
    for (; k0 + 4 <= K; k0 += 4) {
        const double* a0 = A + (k0 + 0) * M;
        const double* a1 = A + (k0 + 1) * M;
        const double* a2 = A + (k0 + 2) * M;
        const double* a3 = A + (k0 + 3) * M;
        const double* b0 = B + (k0 + 0) * N;
        const double* b1 = B + (k0 + 1) * N;
        const double* b2 = B + (k0 + 2) * N;
        const double* b3 = B + (k0 + 3) * N;
        for (int64_t i = 0; i < M; ++i) {
            const double v0 = a0[i], v1 = a1[i], v2 = a2[i], v3 = a3[i];
            double* c = C + i * N;
            for (int64_t j = 0; j < N; ++j)
                c[j] += (v0 * b0[j] + v1 * b1[j]) + (v2 * b2[j] + v3 * b3[j]);
        }
    }
    for (; k0 < K; ++k0) {
        const double* a = A + k0 * M;
        const double* b = B + k0 * N;
        for (int64_t i = 0; i < M; ++i) {
            const double ai = a[i];
            double* c = C + i * N;
            for (int64_t j = 0; j < N; ++j) c[j] += ai * b[j];
        }
    }
}

}  // namespace acegan
