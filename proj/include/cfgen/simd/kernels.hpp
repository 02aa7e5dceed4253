#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense double-precision kernels used by k-means, PCA projection and the
// LIME/SHAP design matrices. Each kernel has a scalar reference and
// vectorized variants; the dispatcher picks the widest one the CPU supports.
// All variants sum in the same order without FMA, so results are
// bit-identical whichever backend runs.

namespace cfgen::simd {

enum class Backend { kScalar, kAvx2, kNeon };

std::string_view to_string(Backend backend);

// Backends compiled into this binary and supported by the running CPU.
bool backend_available(Backend backend);

// Selected once on first use: CFGEN_SIMD=scalar|avx2|neon forces a backend,
// otherwise the widest available one is used.
Backend active_backend();
std::string_view active_backend_name();

// Test hook. Throws std::invalid_argument for an unavailable backend.
void set_backend(Backend backend);

double dot(std::span<const double> a, std::span<const double> b);
double squared_l2(std::span<const double> a, std::span<const double> b);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double squared_l2(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double squared_l2(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
double squared_l2(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace neon
#endif

}  // namespace cfgen::simd
