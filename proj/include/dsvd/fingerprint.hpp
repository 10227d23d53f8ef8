// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "dsvd/tensor_store.hpp"

namespace dsvd {

/// Lowercase hex SHA-256 of the canonical serialization of the checkpoint's
/// tensors (lexicographic order, metadata excluded).
std::string fingerprint(const Checkpoint& ckpt);

}  // namespace dsvd
