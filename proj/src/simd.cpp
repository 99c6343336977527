#include "wsosvm/simd.hpp"

#include <cstdlib>
#include <cstring>

#if defined(__x86_64__) || defined(__i386__)
#define WSOSVM_X86 1
#include <immintrin.h>
#else
#define WSOSVM_X86 0
#endif

namespace wsosvm::simd {

// ---------------------------------------------------------------------------
// Scalar reference kernels
// ---------------------------------------------------------------------------

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sqdist(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void corr7x7_8x8(const double* padded, std::size_t stride,
                 const double* kernel, double* out) {
    for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < 8; ++c) {
            double acc = 0.0;
            for (int kr = 0; kr < 7; ++kr) {
                const double* row = padded + (r + kr) * stride + c;
                const double* krow = kernel + kr * 8;
                for (int kc = 0; kc < 7; ++kc) acc += row[kc] * krow[kc];
            }
            out[r * 8 + c] = acc;
        }
    }
}

}  // namespace scalar

// ---------------------------------------------------------------------------
// AVX2 kernels (compiled with target attributes; only called after cpuid
// confirms avx2+fma support)
// ---------------------------------------------------------------------------

#if WSOSVM_X86

namespace avx2 {

__attribute__((target("avx2,fma"))) static double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

__attribute__((target("avx2,fma"))) double dot(const double* a, const double* b,
                                               std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

__attribute__((target("avx2,fma"))) double sqdist(const double* a, const double* b,
                                                  std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc0 = _mm256_fmadd_pd(d, d, acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

__attribute__((target("avx2,fma"))) double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

__attribute__((target("avx2,fma"))) void axpy(double alpha, const double* x,
                                              double* y, std::size_t n) {
    __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

// Output rows are 8 wide: two 256-bit accumulators per row, one fma per
// kernel tap. Kernel column 7 is zero so the 8-wide loads never contribute
// out-of-tap values.
__attribute__((target("avx2,fma"))) void corr7x7_8x8(const double* padded,
                                                     std::size_t stride,
                                                     const double* kernel,
                                                     double* out) {
    for (int r = 0; r < 8; ++r) {
        __m256d acc_lo = _mm256_setzero_pd();
        __m256d acc_hi = _mm256_setzero_pd();
        for (int kr = 0; kr < 7; ++kr) {
            const double* row = padded + (r + kr) * stride;
            const double* krow = kernel + kr * 8;
            for (int kc = 0; kc < 7; ++kc) {
                __m256d kv = _mm256_set1_pd(krow[kc]);
                acc_lo = _mm256_fmadd_pd(kv, _mm256_loadu_pd(row + kc), acc_lo);
                acc_hi = _mm256_fmadd_pd(kv, _mm256_loadu_pd(row + kc + 4), acc_hi);
            }
        }
        _mm256_storeu_pd(out + r * 8, acc_lo);
        _mm256_storeu_pd(out + r * 8 + 4, acc_hi);
    }
}

}  // namespace avx2

#endif  // WSOSVM_X86

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

namespace {

struct Dispatch {
    Lane lane;
    double (*dot)(const double*, const double*, std::size_t);
    double (*sqdist)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*corr7x7_8x8)(const double*, std::size_t, const double*, double*);
};

constexpr Dispatch kScalar = {Lane::scalar, scalar::dot,  scalar::sqdist,
                              scalar::sum,  scalar::axpy, scalar::corr7x7_8x8};

#if WSOSVM_X86
constexpr Dispatch kAvx2 = {Lane::avx2, avx2::dot,  avx2::sqdist,
                            avx2::sum,  avx2::axpy, avx2::corr7x7_8x8};
#endif

bool avx2_supported() {
#if WSOSVM_X86
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Dispatch g_dispatch = kScalar;

Dispatch initial_dispatch() {
    const char* env = std::getenv("WSOSVM_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return kScalar;
#if WSOSVM_X86
    if (avx2_supported()) {
        if (!env || std::strcmp(env, "avx2") == 0 || std::strcmp(env, "auto") == 0)
            return kAvx2;
    }
#endif
    return kScalar;
}

struct Init {
    Init() { g_dispatch = initial_dispatch(); }
} g_init;

}  // namespace

Lane active_lane() { return g_dispatch.lane; }

bool set_lane(Lane lane) {
    if (lane == Lane::scalar) {
        g_dispatch = kScalar;
        return true;
    }
#if WSOSVM_X86
    if (avx2_supported()) {
        g_dispatch = kAvx2;
        return true;
    }
#endif
    return false;
}

const char* lane_name(Lane lane) {
    return lane == Lane::scalar ? "scalar" : "avx2";
}

double dot(const double* a, const double* b, std::size_t n) {
    return g_dispatch.dot(a, b, n);
}

double sqdist(const double* a, const double* b, std::size_t n) {
    return g_dispatch.sqdist(a, b, n);
}

double sum(const double* x, std::size_t n) { return g_dispatch.sum(x, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    g_dispatch.axpy(alpha, x, y, n);
}

void corr7x7_8x8(const double* padded, std::size_t stride, const double* kernel,
                 double* out) {
    g_dispatch.corr7x7_8x8(padded, stride, kernel, out);
}

}  // namespace wsosvm::simd
