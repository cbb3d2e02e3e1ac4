// Scalar reference kernels. These define the numeric contract: the AVX2
// variants must reproduce them bit-for-bit (see kernels.hpp for the lane
// scheme). Compiled with -ffp-contract=off; fusions are explicit std::fma.

#include "rvqstream/kernels.hpp"

#include <cmath>
#include <limits>

namespace rvqstream::kernels::scalar {

namespace {

// ((l0+l4)+(l2+l6)) + ((l1+l5)+(l3+l7)) -- matches the AVX2 horizontal sum.
inline float reduce_lanes(const float lanes[8]) {
    const float q0 = lanes[0] + lanes[4];
    const float q1 = lanes[1] + lanes[5];
    const float q2 = lanes[2] + lanes[6];
    const float q3 = lanes[3] + lanes[7];
    return (q0 + q2) + (q1 + q3);
}

}  // namespace

float squared_l2(const float* a, const float* b, std::size_t n) {
    float lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    for (std::size_t m = 0; m < n; ++m) {
        const float d = a[m] - b[m];
        lanes[m & 7] = std::fma(d, d, lanes[m & 7]);
    }
    return reduce_lanes(lanes);
}

float dot(const float* a, const float* b, std::size_t n) {
    float lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    for (std::size_t m = 0; m < n; ++m) {
        lanes[m & 7] = std::fma(a[m], b[m], lanes[m & 7]);
    }
    return reduce_lanes(lanes);
}

std::size_t nearest_row(const float* query, const float* rows, std::size_t k,
                        std::size_t dim, float* best_dist) {
    std::size_t best = 0;
    float best_d = std::numeric_limits<float>::infinity();
    for (std::size_t r = 0; r < k; ++r) {
        const float d = squared_l2(query, rows + r * dim, dim);
        if (d < best_d) {  // strict: ties keep the lowest index
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
    for (std::size_t m = 0; m < n; ++m) {
        acc[m] = std::fma(tap, frame[m], acc[m]);
    }
}

void add(float* dst, const float* src, std::size_t n) {
    for (std::size_t m = 0; m < n; ++m) {
        dst[m] += src[m];
    }
}

void sub(float* dst, const float* a, const float* b, std::size_t n) {
    for (std::size_t m = 0; m < n; ++m) {
        dst[m] = a[m] - b[m];
    }
}

}  // namespace rvqstream::kernels::scalar
