// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include "dsvd/simd/kernels.hpp"

namespace dsvd::simd::detail {

inline double fold_lanes(const std::array<double, kLanes>& l) noexcept {
  return ((l[0] + l[1]) + (l[2] + l[3])) + ((l[4] + l[5]) + (l[6] + l[7]));
}

extern const KernelTable kScalarTable;
#if defined(DSVD_HAVE_AVX2_KERNELS)
extern const KernelTable kAvx2Table;
#endif

}  // namespace dsvd::simd::detail
