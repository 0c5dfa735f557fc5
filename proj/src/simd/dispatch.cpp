#include <cstdlib>
#include <string_view>

#include "carm/simd/kernels.hpp"

namespace carm::simd {

#if defined(CARM_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif

const KernelTable* avx2_kernels() noexcept {
#if defined(CARM_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() noexcept {
  static const KernelTable* chosen = [] {
    const char* env = std::getenv("CARM_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return &scalar_kernels();
    const KernelTable* avx2 = avx2_kernels();
    return avx2 != nullptr ? avx2 : &scalar_kernels();
  }();
  return *chosen;
}

}  // namespace carm::simd
