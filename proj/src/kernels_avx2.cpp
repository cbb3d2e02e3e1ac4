// AVX2+FMA kernel variants. This translation unit is the only one built
// with -mavx2 -mfma; callers reach it through the dispatch table after a
// cpuid check. Full 8-float blocks run vectorized, the tail reuses the
// scalar per-lane updates so results stay bit-identical to the reference.

#include "rvqstream/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace rvqstream::kernels::avx2 {

bool supported() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

namespace {

// Same reduction tree as scalar::reduce_lanes.
inline float reduce_acc(__m256 acc, const float* a, const float* b,
                        std::size_t tail_start, std::size_t n, bool squared) {
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, acc);
    for (std::size_t m = tail_start; m < n; ++m) {
        if (squared) {
            const float d = a[m] - b[m];
            lanes[m & 7] = std::fma(d, d, lanes[m & 7]);
        } else {
            lanes[m & 7] = std::fma(a[m], b[m], lanes[m & 7]);
        }
    }
    const float q0 = lanes[0] + lanes[4];
    const float q1 = lanes[1] + lanes[5];
    const float q2 = lanes[2] + lanes[6];
    const float q3 = lanes[3] + lanes[7];
    return (q0 + q2) + (q1 + q3);
}

}  // namespace

float squared_l2(const float* a, const float* b, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    const std::size_t blocks = n / 8;
    for (std::size_t i = 0; i < blocks; ++i) {
        const __m256 va = _mm256_loadu_ps(a + i * 8);
        const __m256 vb = _mm256_loadu_ps(b + i * 8);
        const __m256 d = _mm256_sub_ps(va, vb);
        acc = _mm256_fmadd_ps(d, d, acc);
    }
    return reduce_acc(acc, a, b, blocks * 8, n, /*squared=*/true);
}

float dot(const float* a, const float* b, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    const std::size_t blocks = n / 8;
    for (std::size_t i = 0; i < blocks; ++i) {
        const __m256 va = _mm256_loadu_ps(a + i * 8);
        const __m256 vb = _mm256_loadu_ps(b + i * 8);
        acc = _mm256_fmadd_ps(va, vb, acc);
    }
    return reduce_acc(acc, a, b, blocks * 8, n, /*squared=*/false);
}

std::size_t nearest_row(const float* query, const float* rows, std::size_t k,
                        std::size_t dim, float* best_dist) {
    std::size_t best = 0;
    float best_d = std::numeric_limits<float>::infinity();
    for (std::size_t r = 0; r < k; ++r) {
        const float d = squared_l2(query, rows + r * dim, dim);
        if (d < best_d) {
            best_d = d;
            best = r;
        }
    }
    if (best_dist != nullptr) {
        *best_dist = best_d;
    }
    return best;
}

void axpy(float* acc, const float* frame, float tap, std::size_t n) {
    const __m256 vt = _mm256_set1_ps(tap);
    const std::size_t blocks = n / 8;
    for (std::size_t i = 0; i < blocks; ++i) {
        const __m256 va = _mm256_loadu_ps(acc + i * 8);
        const __m256 vf = _mm256_loadu_ps(frame + i * 8);
        _mm256_storeu_ps(acc + i * 8, _mm256_fmadd_ps(vt, vf, va));
    }
    for (std::size_t m = blocks * 8; m < n; ++m) {
        acc[m] = std::fma(tap, frame[m], acc[m]);
    }
}

void add(float* dst, const float* src, std::size_t n) {
    const std::size_t blocks = n / 8;
    for (std::size_t i = 0; i < blocks; ++i) {
        const __m256 vd = _mm256_loadu_ps(dst + i * 8);
        const __m256 vs = _mm256_loadu_ps(src + i * 8);
        _mm256_storeu_ps(dst + i * 8, _mm256_add_ps(vd, vs));
    }
    for (std::size_t m = blocks * 8; m < n; ++m) {
        dst[m] += src[m];
    }
}

void sub(float* dst, const float* a, const float* b, std::size_t n) {
    const std::size_t blocks = n / 8;
    for (std::size_t i = 0; i < blocks; ++i) {
        const __m256 va = _mm256_loadu_ps(a + i * 8);
        const __m256 vb = _mm256_loadu_ps(b + i * 8);
        _mm256_storeu_ps(dst + i * 8, _mm256_sub_ps(va, vb));
    }
    for (std::size_t m = blocks * 8; m < n; ++m) {
        dst[m] = a[m] - b[m];
    }
}

}  // namespace rvqstream::kernels::avx2

#endif  // x86_64
