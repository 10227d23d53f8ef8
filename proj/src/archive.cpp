// SPDX-License-Identifier: Apache-2.0
#include "dsvd/archive.hpp"

#include <set>

#include <json.hpp>

#include "dsvd/error.hpp"

#ifndef DSVD_TOOL_VERSION
#define DSVD_TOOL_VERSION "0.0.0"
#endif

namespace dsvd {
namespace {

using nlohmann::json;

constexpr std::string_view kSuffixA = ".delta.A";
constexpr std::string_view kSuffixB = ".delta.B";
constexpr std::string_view kSuffixDense = ".delta.dense";

[[noreturn]] void mismatch(const std::string& why) {
  raise(ErrorCode::ManifestTensorMismatch, "archive manifest/tensor mismatch: " + why);
}

std::string with_suffix(const std::string& name, std::string_view suffix) {
  return name + std::string(suffix);
}

// Takes ownership of a tensor from the pool, checking dtype and shape.
const TensorRecord& expect_tensor(const Checkpoint& ckpt, std::set<std::string>& unclaimed,
                                  const std::string& name, Dtype dtype, const Shape& shape) {
  const TensorRecord* t = ckpt.find(name);
  if (t == nullptr) mismatch("tensor '" + name + "' is missing");
  if (t->dtype != dtype)
    mismatch("tensor '" + name + "' is " + std::string(to_string(t->dtype)) + ", manifest says " +
             std::string(to_string(dtype)));
  if (t->shape != shape)
    mismatch("tensor '" + name + "' has shape " + shape_string(t->shape) + ", expected " + shape_string(shape));
  unclaimed.erase(name);
  return *t;
}

}  // namespace

std::string tool_version() { return std::string("dsvd ") + DSVD_TOOL_VERSION; }

std::string manifest_json(const DeltaArchive& archive) {
  json index = json::object();
  for (const auto& [name, layer] : archive.layers) {
    json entry = {{"kind", std::string(to_string(layer.kind()))},
                  {"original_shape", layer.original_shape},
                  {"original_dtype", std::string(to_string(layer.original_dtype))}};
    if (layer.kind() == LayerKind::Factors) entry["rank"] = layer.rank();
    index[name] = std::move(entry);
  }
  const json manifest = {{"format_version", archive.format_version},
                         {"tau", archive.tau},
                         {"energy_mode", std::string(to_string(archive.energy_mode))},
                         {"base_fingerprint", archive.base_fingerprint},
                         {"tool_version", tool_version()},
                         {"layer_index", std::move(index)}};
  return manifest.dump();
}

Checkpoint archive_to_checkpoint(const DeltaArchive& archive) {
  Checkpoint ckpt;
  for (const auto& [name, layer] : archive.layers) {
    if (const auto* f = std::get_if<Factors>(&layer.payload)) {
      ckpt.add(TensorRecord::from_doubles(with_suffix(name, kSuffixA), layer.original_dtype,
                                          {f->a.rows(), f->a.cols()}, f->a.values()));
      ckpt.add(TensorRecord::from_doubles(with_suffix(name, kSuffixB), layer.original_dtype,
                                          {f->b.rows(), f->b.cols()}, f->b.values()));
    } else if (const auto* d = std::get_if<Dense>(&layer.payload)) {
      ckpt.add(TensorRecord::from_doubles(with_suffix(name, kSuffixDense), layer.original_dtype,
                                          layer.original_shape, d->delta.values()));
    }
  }
  ckpt.metadata.emplace(std::string(kManifestKey), manifest_json(archive));
  return ckpt;
}

DeltaArchive archive_from_checkpoint(const Checkpoint& ckpt) {
  const auto it = ckpt.metadata.find(std::string(kManifestKey));
  if (it == ckpt.metadata.end())
    raise(ErrorCode::MissingManifest, "container has no '" + std::string(kManifestKey) + "' metadata entry");

  json manifest;
  try {
    manifest = json::parse(it->second);
  } catch (const json::exception& e) {
    raise(ErrorCode::MalformedHeader, std::string("manifest is not valid JSON: ") + e.what());
  }

  DeltaArchive archive;
  try {
    archive.format_version = manifest.at("format_version").get<int>();
    if (archive.format_version != kFormatVersion)
      raise(ErrorCode::UnsupportedFormatVersion,
            "archive format version " + std::to_string(archive.format_version) + " is not supported (expected " +
                std::to_string(kFormatVersion) + ")");
    archive.tau = manifest.at("tau").get<double>();
    archive.base_fingerprint = manifest.at("base_fingerprint").get<std::string>();
    archive.energy_mode = manifest.contains("energy_mode")
                              ? parse_energy_mode(manifest.at("energy_mode").get<std::string>())
                              : EnergyMode::Linear;

    std::set<std::string> unclaimed;
    for (const auto& [name, record] : ckpt.tensors) unclaimed.insert(name);

    for (const auto& [name, entry] : manifest.at("layer_index").items()) {
      CompressedLayer layer;
      layer.name = name;
      layer.original_shape = entry.at("original_shape").get<Shape>();
      layer.original_dtype = parse_dtype(entry.at("original_dtype").get<std::string>());
      const LayerKind kind = parse_layer_kind(entry.at("kind").get<std::string>());
      if ((kind == LayerKind::Factors) != entry.contains("rank"))
        mismatch("layer '" + name + "' has kind " + std::string(to_string(kind)) +
                 (entry.contains("rank") ? " but carries a rank" : " but no rank"));
      const auto [d, k] = matrix_dims(layer.original_shape);

      switch (kind) {
        case LayerKind::Factors: {
          const auto t = entry.at("rank").get<std::size_t>();
          if (t < 1 || t > std::min(d, k)) mismatch("layer '" + name + "' has invalid rank " + std::to_string(t));
          const auto& a = expect_tensor(ckpt, unclaimed, with_suffix(name, kSuffixA), layer.original_dtype, {d, t});
          const auto& b = expect_tensor(ckpt, unclaimed, with_suffix(name, kSuffixB), layer.original_dtype, {t, k});
          layer.payload = Factors{Matrix(d, t, a.to_doubles()), Matrix(t, k, b.to_doubles()), t};
          break;
        }
        case LayerKind::Dense:
        case LayerKind::Standalone: {
          const auto& t = expect_tensor(ckpt, unclaimed, with_suffix(name, kSuffixDense), layer.original_dtype,
                                        layer.original_shape);
          layer.payload = Dense{Matrix(d, k, t.to_doubles()), kind == LayerKind::Standalone};
          break;
        }
        case LayerKind::Unchanged:
          layer.payload = Unchanged{};
          break;
      }
      archive.layers.emplace(name, std::move(layer));
    }
    if (!unclaimed.empty()) mismatch("tensor '" + *unclaimed.begin() + "' is not described by the manifest");
  } catch (const json::exception& e) {
    raise(ErrorCode::MalformedHeader, std::string("manifest has an invalid structure: ") + e.what());
  }

  archive.stats = compute_stats(archive.layers, archive.tau);
  return archive;
}

void save_archive(const DeltaArchive& archive, const std::filesystem::path& path) {
  write_checkpoint(archive_to_checkpoint(archive), path);
}

DeltaArchive load_archive(const std::filesystem::path& path) {
  return archive_from_checkpoint(read_checkpoint(path));
}

}  // namespace dsvd
