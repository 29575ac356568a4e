#include "cufun/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace cufun::simd {
namespace {

const KernelTable* detect() {
  if (const char* env = std::getenv("CUFUN_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_kernels();
#if defined(CUFUN_HAVE_AVX2)
    if (want == "avx2" && cpu_has_avx2()) return &avx2_kernels();
#endif
  }
#if defined(CUFUN_HAVE_AVX2)
  if (cpu_has_avx2()) return &avx2_kernels();
#endif
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(CUFUN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool select(std::string_view name) {
  if (name == "scalar") {
    slot().store(&scalar_kernels(), std::memory_order_release);
    return true;
  }
#if defined(CUFUN_HAVE_AVX2)
  if (name == "avx2" && cpu_has_avx2()) {
    slot().store(&avx2_kernels(), std::memory_order_release);
    return true;
  }
#endif
  return false;
}

}  // namespace cufun::simd
