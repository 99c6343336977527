#pragma once

#include <cstddef>
#include <string>

namespace wsosvm::simd {

// Arithmetic inner-loop kernels used by the kernel/Gram, QP, and Gabor
// paths. Every kernel has a scalar reference implementation and an AVX2
// variant; the active variant is chosen once at startup (cpuid, overridable
// with WSOSVM_SIMD=scalar|avx2) and stays fixed for the process so outputs
// are reproducible run-to-run on the same machine.

enum class Lane { scalar, avx2 };

Lane active_lane();
// Returns false if the requested lane is unsupported on this CPU.
bool set_lane(Lane lane);
const char* lane_name(Lane lane);

double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);

// Valid 7x7 correlation producing an 8x8 output tile. `padded` is a
// 14-row tile with `stride` doubles per row (stride >= 14); `kernel` is
// 7 rows x 8 columns row-major with column 7 zero. out is 64 doubles.
void corr7x7_8x8(const double* padded, std::size_t stride,
                 const double* kernel, double* out);

// Reference lane, exposed so tests can check the dispatched lane against it.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void corr7x7_8x8(const double* padded, std::size_t stride,
                 const double* kernel, double* out);
}  // namespace scalar

}  // namespace wsosvm::simd
