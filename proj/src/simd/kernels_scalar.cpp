#include "cfgen/simd/kernels.hpp"

// Reference order shared by every backend: four interleaved partial sums over
// the largest multiple-of-four prefix, combined as (s0 + s2) + (s1 + s3), then
// the tail added in index order. No fused multiply-add anywhere.

namespace cfgen::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) s[j] += a[i + j] * b[i + j];
  }
  double sum = (s[0] + s[2]) + (s[1] + s[3]);
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double squared_l2(const double* a, const double* b, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double d = a[i + j] - b[i + j];
      s[j] += d * d;
    }
  }
  double sum = (s[0] + s[2]) + (s[1] + s[3]);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace cfgen::simd::scalar
