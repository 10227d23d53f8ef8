// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dsvd {

enum class ErrorCode {
  InvalidArgument,
  IoFailure,
  MalformedHeader,
  UnsupportedDtype,
  DuplicateName,
  DimensionMismatch,
  ConvergenceFailure,
  ZeroEnergy,
  InvalidTau,
  LayerSetMismatch,
  ShapeMismatch,
  FingerprintMismatch,
  MissingManifest,
  ManifestTensorMismatch,
  UnsupportedFormatVersion,
  NoSharedLayers,
  WindowTooLarge,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. `code()` is stable and is what the
/// CLI prints in its structured error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace dsvd
