// SPDX-License-Identifier: Apache-2.0
#include "dsvd/error.hpp"

namespace dsvd {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::ZeroEnergy: return "ZeroEnergy";
    case ErrorCode::InvalidTau: return "InvalidTau";
    case ErrorCode::LayerSetMismatch: return "LayerSetMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
    case ErrorCode::MissingManifest: return "MissingManifest";
    case ErrorCode::ManifestTensorMismatch: return "ManifestTensorMismatch";
    case ErrorCode::UnsupportedFormatVersion: return "UnsupportedFormatVersion";
    case ErrorCode::NoSharedLayers: return "NoSharedLayers";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
  }
  return "Unknown";
}

void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace dsvd
