#pragma once

// Data-parallel inner loops behind the codec: squared-L2 distance, dot
// product, nearest-centroid scan, FIR tap accumulation and elementwise
// vector ops. Each kernel exists as a scalar reference and, on x86-64, an
// AVX2+FMA variant selected once at runtime.
//
// The two variants are bit-identical by construction, not approximately
// equal. Every reducing kernel follows the same fixed accumulation scheme:
//
//   * element m contributes to lane (m & 7) via an explicit fused
//     multiply-add (std::fma / _mm256_fmadd_ps), lanes accumulate in
//     ascending m order;
//   * the 8 lanes reduce as ((l0+l4)+(l2+l6)) + ((l1+l5)+(l3+l7)), which is
//     what the AVX2 horizontal sum produces.
//
// Elementwise kernels have no reduction, so lane order does not matter
// there. The equivalence suite asserts exact equality of the variants, and
// everything built on top (training, encode, decode) is therefore invariant
// to which backend dispatches.

#include <cstddef>
#include <cstdint>

namespace rvqstream::kernels {

enum class Backend { scalar, avx2 };

// Backend chosen at startup: AVX2 when the CPU supports it, otherwise
// scalar. RVQSTREAM_KERNELS=scalar|avx2 in the environment overrides.
Backend active_backend();
const char* backend_name(Backend b);

// Force a backend (tests). Throws ConfigError if unsupported on this host.
void force_backend(Backend b);

// ---- dispatched entry points -----------------------------------------

// sum_m (a[m]-b[m])^2
float squared_l2(const float* a, const float* b, std::size_t n);

// sum_m a[m]*b[m]
float dot(const float* a, const float* b, std::size_t n);

// Index of the row of `rows` (k rows, each `dim` wide, row-major) closest
// to `query` in squared L2; ties resolve to the lowest index. The winning
// distance is written to *best_dist when non-null.
std::size_t nearest_row(const float* query, const float* rows, std::size_t k,
                        std::size_t dim, float* best_dist);

// acc[i] += tap * frame[i]
void axpy(float* acc, const float* frame, float tap, std::size_t n);

// dst[i] += src[i]
void add(float* dst, const float* src, std::size_t n);

// dst[i] = a[i] - b[i]
void sub(float* dst, const float* a, const float* b, std::size_t n);

// ---- per-backend implementations (exposed for equivalence tests) ------

namespace scalar {
float squared_l2(const float* a, const float* b, std::size_t n);
float dot(const float* a, const float* b, std::size_t n);
std::size_t nearest_row(const float* query, const float* rows, std::size_t k,
                        std::size_t dim, float* best_dist);
void axpy(float* acc, const float* frame, float tap, std::size_t n);
void add(float* dst, const float* src, std::size_t n);
void sub(float* dst, const float* a, const float* b, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define RVQSTREAM_KERNELS_HAVE_AVX2 1
namespace avx2 {
bool supported();  // cpuid check for AVX2+FMA
float squared_l2(const float* a, const float* b, std::size_t n);
float dot(const float* a, const float* b, std::size_t n);
std::size_t nearest_row(const float* query, const float* rows, std::size_t k,
                        std::size_t dim, float* best_dist);
void axpy(float* acc, const float* frame, float tap, std::size_t n);
void add(float* dst, const float* src, std::size_t n);
void sub(float* dst, const float* a, const float* b, std::size_t n);
}  // namespace avx2
#endif

}  // namespace rvqstream::kernels
