// SPDX-License-Identifier: Apache-2.0
#include "dsvd/pipeline.hpp"

#include <cmath>

#include "dsvd/analysis.hpp"
#include "dsvd/archive.hpp"
#include "dsvd/error.hpp"
#include "dsvd/fingerprint.hpp"
#include "dsvd/tensor_store.hpp"

namespace dsvd::pipeline {

using nlohmann::ordered_json;

ordered_json compress_files(const fs::path& base, const fs::path& finetuned, const fs::path& out,
                            const CompressOptions& options) {
  check_tau(options.tau);
  const Checkpoint pre = read_checkpoint(base);
  const Checkpoint ft = read_checkpoint(finetuned);
  const DeltaArchive archive = compress_checkpoint(pre, ft, options);
  save_archive(archive, out);
  ordered_json report = to_json(compression_report(archive));
  report["mismatch_warnings"] = archive.mismatch_warnings;
  return report;
}

ReconstructOutcome reconstruct_files(const fs::path& base, const fs::path& delta, const fs::path& out, bool force,
                                     std::size_t threads) {
  const Checkpoint pre = read_checkpoint(base);
  const DeltaArchive archive = load_archive(delta);
  ReconstructOutcome outcome;
  if (force) outcome.fingerprint_matched = fingerprint(pre) == archive.base_fingerprint;
  write_checkpoint(reconstruct_checkpoint(pre, archive, {force, threads}), out);
  return outcome;
}

ordered_json inspect_file(const fs::path& delta, const std::optional<fs::path>& groups) {
  const DeltaArchive archive = load_archive(delta);
  const LayerGroupSpec spec = groups ? LayerGroupSpec::load(*groups) : LayerGroupSpec::unet_default();

  std::map<std::string, std::size_t> kinds;
  for (const auto& [name, layer] : archive.layers) ++kinds[std::string(to_string(layer.kind()))];
  ordered_json manifest = {{"format_version", archive.format_version},
                           {"tau", archive.tau},
                           {"energy_mode", std::string(to_string(archive.energy_mode))},
                           {"base_fingerprint", archive.base_fingerprint},
                           {"layers", archive.layers.size()},
                           {"kinds", kinds}};
  return {{"manifest", std::move(manifest)},
          {"rank_table", to_json(rank_table(archive, spec))},
          {"compression", to_json(compression_report(archive))}};
}

ordered_json diff_files(const fs::path& base, const fs::path& finetuned) {
  return to_json(layer_similarity_report(read_checkpoint(base), read_checkpoint(finetuned)));
}

VerifyOutcome verify_files(const fs::path& base, const fs::path& finetuned, const fs::path& delta, double tol,
                           std::size_t threads) {
  const Checkpoint pre = read_checkpoint(base);
  const Checkpoint ft = read_checkpoint(finetuned);
  const Checkpoint rebuilt = reconstruct_checkpoint(pre, load_archive(delta), {false, threads});

  ordered_json layers = ordered_json::array();
  double max_error = 0.0;
  double sum_error = 0.0;
  for (const auto& [name, truth] : ft.tensors) {
    const TensorRecord* got = rebuilt.find(name);
    if (got == nullptr) raise(ErrorCode::LayerSetMismatch, "layer '" + name + "' missing after reconstruction");
    if (got->shape != truth.shape)
      raise(ErrorCode::ShapeMismatch, "layer '" + name + "' reconstructed as " + shape_string(got->shape) +
                                          ", expected " + shape_string(truth.shape));
    const auto expected = truth.to_doubles();
    const auto actual = got->to_doubles();
    double diff = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      diff += (actual[i] - expected[i]) * (actual[i] - expected[i]);
      norm += expected[i] * expected[i];
    }
    const double error = norm > 0.0 ? std::sqrt(diff / norm) : std::sqrt(diff);
    max_error = std::max(max_error, error);
    sum_error += error;
    layers.push_back({{"layer", name}, {"relative_error", error}});
  }

  VerifyOutcome outcome;
  outcome.within_tolerance = max_error <= tol;
  outcome.report = {{"tol", tol},
                    {"max_relative_error", max_error},
                    {"mean_relative_error", ft.tensors.empty() ? 0.0 : sum_error / static_cast<double>(ft.tensors.size())},
                    {"pass", outcome.within_tolerance},
                    {"layers", std::move(layers)}};
  return outcome;
}

}  // namespace dsvd::pipeline
