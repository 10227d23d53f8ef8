// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <string_view>

#include "kernel_tables.hpp"

namespace dsvd::simd {

std::string_view to_string(Level level) noexcept {
  switch (level) {
    case Level::Scalar: return "scalar";
    case Level::Avx2: return "avx2";
  }
  return "unknown";
}

const KernelTable& scalar_kernels() noexcept { return detail::kScalarTable; }

const KernelTable* avx2_kernels() noexcept {
#if defined(DSVD_HAVE_AVX2_KERNELS)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &detail::kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& kernels() noexcept {
  static const KernelTable& selected = [] () -> const KernelTable& {
    const char* pinned = std::getenv("DSVD_SIMD");
    if (pinned != nullptr && std::string_view(pinned) == "scalar") return detail::kScalarTable;
    if (const KernelTable* avx2 = avx2_kernels()) return *avx2;
    return detail::kScalarTable;
  }();
  return selected;
}

}  // namespace dsvd::simd
