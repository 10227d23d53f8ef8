// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "dsvd/delta.hpp"
#include "dsvd/tensor_store.hpp"

namespace dsvd {

/// Container metadata key holding the manifest JSON.
inline constexpr std::string_view kManifestKey = "dsvd_manifest";

std::string tool_version();

/// Canonical manifest JSON (sorted keys, compact) for an archive.
std::string manifest_json(const DeltaArchive& archive);

/// Archive as a tensor-store checkpoint: "<name>.delta.A" [d,t] and
/// "<name>.delta.B" [t,k] per factors layer, "<name>.delta.dense" in the
/// original shape per dense or standalone layer, all in the layer's dtype.
Checkpoint archive_to_checkpoint(const DeltaArchive& archive);

/// Inverse of archive_to_checkpoint. Throws MissingManifest,
/// UnsupportedFormatVersion, ManifestTensorMismatch or MalformedHeader.
DeltaArchive archive_from_checkpoint(const Checkpoint& ckpt);

void save_archive(const DeltaArchive& archive, const std::filesystem::path& path);
DeltaArchive load_archive(const std::filesystem::path& path);

}  // namespace dsvd
