// SPDX-License-Identifier: Apache-2.0
#pragma once

// Path-in, path-out entry points. The CLI is a thin shell over these, and
// they are the surface meant for foreign-language bindings.

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "dsvd/delta.hpp"

namespace dsvd::pipeline {

namespace fs = std::filesystem;

/// compress_checkpoint + save_archive. Returns the compression report with a
/// "mismatch_warnings" count appended.
nlohmann::ordered_json compress_files(const fs::path& base, const fs::path& finetuned, const fs::path& out,
                                      const CompressOptions& options);

struct ReconstructOutcome {
  bool fingerprint_matched = true;
};

ReconstructOutcome reconstruct_files(const fs::path& base, const fs::path& delta, const fs::path& out,
                                     bool force, std::size_t threads = 1);

/// Manifest summary, per-group ranks and compression accounting.
nlohmann::ordered_json inspect_file(const fs::path& delta, const std::optional<fs::path>& groups = std::nullopt);

nlohmann::ordered_json diff_files(const fs::path& base, const fs::path& finetuned);

struct VerifyOutcome {
  nlohmann::ordered_json report;
  bool within_tolerance = false;
};

/// Reconstructs from base + delta and measures per-layer relative Frobenius
/// error against the fine-tuned checkpoint.
VerifyOutcome verify_files(const fs::path& base, const fs::path& finetuned, const fs::path& delta, double tol,
                           std::size_t threads = 1);

}  // namespace dsvd::pipeline
