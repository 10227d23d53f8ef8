// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dsvd/delta.hpp"
#include "dsvd/matrix.hpp"
#include "dsvd/tensor_store.hpp"

namespace dsvd {

// ---- layer similarity --------------------------------------------------

inline constexpr double kUnchangedCosine = 0.9999;

struct SimilarityEntry {
  std::string layer;
  double cosine = 0.0;
};

struct SimilarityReport {
  std::vector<SimilarityEntry> entries;  // lexicographic by layer name
  double unchanged_fraction = 0.0;       // share of entries with cosine > 0.9999
};

/// Per-tensor cosine similarity over names present in both checkpoints with
/// equal shapes. Throws NoSharedLayers if there are none.
SimilarityReport layer_similarity_report(const Checkpoint& pre, const Checkpoint& ft);

nlohmann::ordered_json to_json(const SimilarityReport& report);

// ---- rank table --------------------------------------------------------

struct LayerGroup {
  std::string name;
  std::vector<std::string> prefixes;
};

/// Layers go to the first group with a matching name prefix, else "other".
struct LayerGroupSpec {
  std::vector<LayerGroup> groups;

  /// conv_in, conv_out, down_blocks, mid_block, up_blocks.
  static LayerGroupSpec unet_default();
  /// {"groups": [{"name": "...", "prefixes": ["..."]}]}
  static LayerGroupSpec from_json(const nlohmann::json& doc);
  static LayerGroupSpec load(const std::filesystem::path& path);

  std::string group_of(const std::string& layer) const;
};

inline constexpr std::string_view kOtherGroup = "other";

struct GroupRank {
  std::string group;
  double average_rank = 0.0;
  std::size_t layers = 0;
};

/// Mean rank per group in configured order ("other" last): t for factors, min(d,k)
/// for dense layers, 0 when unchanged. Empty groups are omitted.
std::vector<GroupRank> rank_table(const DeltaArchive& archive, const LayerGroupSpec& spec);

nlohmann::ordered_json to_json(const std::vector<GroupRank>& table);

// ---- compression accounting ---------------------------------------------

struct LayerAccounting {
  std::string layer;
  std::string kind;
  std::size_t rank = 0;
  Shape shape;
  std::uint64_t dense_params = 0;
  std::uint64_t stored_params = 0;
};

struct CompressionReport {
  std::uint64_t dense_param_count = 0;
  std::uint64_t stored_param_count = 0;
  std::optional<double> ratio;  // empty when nothing is stored
  std::uint64_t estimated_bytes = 0;
  double tau = 0.0;
  std::vector<LayerAccounting> layers;
};

CompressionReport compression_report(const DeltaArchive& archive);

/// "ratio" serializes as the string "infinite" when nothing is stored.
nlohmann::ordered_json to_json(const CompressionReport& report);

// ---- SSIM ---------------------------------------------------------------

inline constexpr std::size_t kSsimWindow = 8;

/// Mean SSIM over all 8x8 windows at stride 1, uniform weights, population
/// statistics, C1 = (0.01 L)^2 and C2 = (0.03 L)^2.
double ssim(const Matrix& x, const Matrix& y, double dynamic_range);

/// Reads a binary (P5) or ASCII (P2) greymap into a matrix of raw levels.
Matrix read_pgm(const std::filesystem::path& path);

}  // namespace dsvd
