#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "cfgen/simd/kernels.hpp"

namespace cfgen::simd {

namespace {

struct KernelTable {
  Backend backend;
  double (*dot)(const double*, const double*, std::size_t);
  double (*squared_l2)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
};

constexpr KernelTable kScalarTable{Backend::kScalar, scalar::dot, scalar::squared_l2, scalar::axpy};
#if defined(__x86_64__) || defined(_M_X64)
constexpr KernelTable kAvx2Table{Backend::kAvx2, avx2::dot, avx2::squared_l2, avx2::axpy};
#endif
#if defined(__aarch64__)
constexpr KernelTable kNeonTable{Backend::kNeon, neon::dot, neon::squared_l2, neon::axpy};
#endif

const KernelTable* table_for(Backend backend) {
  switch (backend) {
    case Backend::kScalar: return &kScalarTable;
    case Backend::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
      return &kAvx2Table;
#else
      return nullptr;
#endif
    case Backend::kNeon:
#if defined(__aarch64__)
      return &kNeonTable;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable* initial_table() {
  if (const char* forced = std::getenv("CFGEN_SIMD")) {
    const std::string name(forced);
    for (Backend b : {Backend::kScalar, Backend::kAvx2, Backend::kNeon}) {
      if (name == to_string(b) && backend_available(b)) return table_for(b);
    }
  }
  if (backend_available(Backend::kAvx2)) return table_for(Backend::kAvx2);
  if (backend_available(Backend::kNeon)) return table_for(Backend::kNeon);
  return &kScalarTable;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("simd kernel: length mismatch");
}

}  // namespace

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
    case Backend::kNeon: return "neon";
  }
  return "?";
}

bool backend_available(Backend backend) {
  switch (backend) {
    case Backend::kScalar: return true;
    case Backend::kAvx2:
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::kNeon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend active_backend() { return current().load()->backend; }
std::string_view active_backend_name() { return to_string(active_backend()); }

void set_backend(Backend backend) {
  if (!backend_available(backend)) {
    throw std::invalid_argument("simd backend not available: " + std::string(to_string(backend)));
  }
  current().store(table_for(backend));
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size());
  return current().load()->dot(a.data(), b.data(), a.size());
}

double squared_l2(std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size());
  return current().load()->squared_l2(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_sizes(x.size(), y.size());
  current().load()->axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace cfgen::simd
