// Runtime backend selection. Resolved once; RVQSTREAM_KERNELS=scalar|avx2
// overrides detection, force_backend() overrides both (tests).

#include "rvqstream/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <string>

#include "rvqstream/errors.hpp"

namespace rvqstream::kernels {

namespace {

struct Ops {
    float (*squared_l2)(const float*, const float*, std::size_t);
    float (*dot)(const float*, const float*, std::size_t);
    std::size_t (*nearest_row)(const float*, const float*, std::size_t, std::size_t, float*);
    void (*axpy)(float*, const float*, float, std::size_t);
    void (*add)(float*, const float*, std::size_t);
    void (*sub)(float*, const float*, const float*, std::size_t);
    Backend backend;
};

constexpr Ops kScalarOps = {scalar::squared_l2, scalar::dot, scalar::nearest_row,
                            scalar::axpy,       scalar::add, scalar::sub,
                            Backend::scalar};

#ifdef RVQSTREAM_KERNELS_HAVE_AVX2
constexpr Ops kAvx2Ops = {avx2::squared_l2, avx2::dot, avx2::nearest_row,
                          avx2::axpy,       avx2::add, avx2::sub,
                          Backend::avx2};
#endif

bool avx2_usable() {
#ifdef RVQSTREAM_KERNELS_HAVE_AVX2
    return avx2::supported();
#else
    return false;
#endif
}

const Ops* detect() {
    const char* env = std::getenv("RVQSTREAM_KERNELS");
    if (env != nullptr) {
        if (std::strcmp(env, "scalar") == 0) {
            return &kScalarOps;
        }
#ifdef RVQSTREAM_KERNELS_HAVE_AVX2
        if (std::strcmp(env, "avx2") == 0 && avx2_usable()) {
            return &kAvx2Ops;
        }
#endif
    }
#ifdef RVQSTREAM_KERNELS_HAVE_AVX2
    if (avx2_usable()) {
        return &kAvx2Ops;
    }
#endif
    return &kScalarOps;
}

const Ops* g_ops = nullptr;

const Ops* ops() {
    if (g_ops == nullptr) {
        g_ops = detect();
    }
    return g_ops;
}

}  // namespace

Backend active_backend() { return ops()->backend; }

const char* backend_name(Backend b) {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

void force_backend(Backend b) {
    if (b == Backend::scalar) {
        g_ops = &kScalarOps;
        return;
    }
#ifdef RVQSTREAM_KERNELS_HAVE_AVX2
    if (b == Backend::avx2 && avx2_usable()) {
        g_ops = &kAvx2Ops;
        return;
    }
#endif
    throw ConfigError(std::string("kernel backend not available on this host: ") +
                      backend_name(b));
}

float squared_l2(const float* a, const float* b, std::size_t n) {
    return ops()->squared_l2(a, b, n);
}

float dot(const float* a, const float* b, std::size_t n) {
    return ops()->dot(a, b, n);
}

std::size_t nearest_row(const float* query, const float* rows, std::size_t k,
                        std::size_t dim, float* best_dist) {
    return ops()->nearest_row(query, rows, k, dim, best_dist);
}

void axpy(float* acc, const float* frame, float tap, std::size_t n) {
    ops()->axpy(acc, frame, tap, n);
}

void add(float* dst, const float* src, std::size_t n) { ops()->add(dst, src, n); }

void sub(float* dst, const float* a, const float* b, std::size_t n) {
    ops()->sub(dst, a, b, n);
}

}  // namespace rvqstream::kernels
