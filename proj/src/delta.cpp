// SPDX-License-Identifier: Apache-2.0
#include "dsvd/delta.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dsvd/error.hpp"
#include "dsvd/fingerprint.hpp"
#include "dsvd/linalg.hpp"
#include "dsvd/parallel.hpp"
#include "dsvd/simd/kernels.hpp"

namespace dsvd {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::string quoted(const std::string& s) { return "'" + s + "'"; }

// Fine-tuned minus base as a d x k matrix in the tensor's matrix view.
Matrix tensor_delta(const TensorRecord& ft, const TensorRecord& pre) {
  const auto [rows, cols] = matrix_dims(ft.shape);
  return compute_delta(Matrix(rows, cols, ft.to_doubles()), Matrix(rows, cols, pre.to_doubles()));
}

CompressedLayer compress_layer(const TensorRecord& pre, const TensorRecord& ft, double tau, EnergyMode mode) {
  CompressedLayer layer{ft.name, ft.shape, ft.dtype, Unchanged{}};
  if (ft.numel() == 0) return layer;
  try {
    layer.payload = factorize_layer(tensor_delta(ft, pre), tau, mode);
  } catch (const Error& e) {
    throw Error(e.code(), "layer " + quoted(ft.name) + ": " + e.what());
  }
  return layer;
}

CompressedLayer standalone_layer(const TensorRecord& ft) {
  const auto [rows, cols] = matrix_dims(ft.shape);
  return {ft.name, ft.shape, ft.dtype, Dense{Matrix(rows, cols, ft.to_doubles()), true}};
}

TensorRecord apply_layer(const TensorRecord* base, const CompressedLayer& layer) {
  if (const auto* dense = std::get_if<Dense>(&layer.payload); dense && dense->standalone)
    return TensorRecord::from_doubles(layer.name, layer.original_dtype, layer.original_shape,
                                      dense->delta.values());
  if (base == nullptr)
    raise(ErrorCode::LayerSetMismatch, "archive layer " + quoted(layer.name) + " is missing from the base checkpoint");
  if (base->shape != layer.original_shape)
    raise(ErrorCode::ShapeMismatch, "layer " + quoted(layer.name) + ": base shape " + shape_string(base->shape) +
                                        ", archive expects " + shape_string(layer.original_shape));

  if (std::holds_alternative<Unchanged>(layer.payload) && base->dtype == layer.original_dtype) return *base;

  std::vector<double> values = base->to_doubles();
  const auto& k = simd::kernels();
  std::visit(Overloaded{
                 [&](const Factors& f) {
                   const Matrix product = matmul(f.a, f.b);
                   k.axpy(1.0, product.values(), values);
                 },
                 [&](const Dense& d) { k.axpy(1.0, d.delta.values(), values); },
                 [](const Unchanged&) {},
             },
             layer.payload);
  return TensorRecord::from_doubles(layer.name, layer.original_dtype, layer.original_shape, values);
}

}  // namespace

std::string_view to_string(EnergyMode mode) noexcept {
  return mode == EnergyMode::Linear ? "linear" : "squared";
}

EnergyMode parse_energy_mode(std::string_view text) {
  if (text == "linear") return EnergyMode::Linear;
  if (text == "squared") return EnergyMode::Squared;
  raise(ErrorCode::InvalidArgument, "unknown energy mode '" + std::string(text) + "'");
}

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::Factors: return "factors";
    case LayerKind::Dense: return "dense";
    case LayerKind::Standalone: return "standalone";
    case LayerKind::Unchanged: return "unchanged";
  }
  return "unknown";
}

LayerKind parse_layer_kind(std::string_view text) {
  if (text == "factors") return LayerKind::Factors;
  if (text == "dense") return LayerKind::Dense;
  if (text == "standalone") return LayerKind::Standalone;
  if (text == "unchanged") return LayerKind::Unchanged;
  raise(ErrorCode::ManifestTensorMismatch, "unknown layer kind '" + std::string(text) + "'");
}

LayerKind CompressedLayer::kind() const noexcept {
  if (std::holds_alternative<Factors>(payload)) return LayerKind::Factors;
  if (const auto* d = std::get_if<Dense>(&payload)) return d->standalone ? LayerKind::Standalone : LayerKind::Dense;
  return LayerKind::Unchanged;
}

std::size_t CompressedLayer::rank() const {
  if (const auto* f = std::get_if<Factors>(&payload)) return f->rank;
  if (std::holds_alternative<Dense>(payload)) {
    const auto [rows, cols] = matrix_dims(original_shape);
    return std::min(rows, cols);
  }
  return 0;
}

std::uint64_t CompressedLayer::dense_params() const {
  if (std::holds_alternative<Unchanged>(payload)) return 0;
  return element_count(original_shape);
}

std::uint64_t CompressedLayer::stored_params() const {
  if (const auto* f = std::get_if<Factors>(&payload)) return f->a.size() + f->b.size();
  if (std::holds_alternative<Dense>(payload)) return element_count(original_shape);
  return 0;
}

CompressionStats compute_stats(const std::map<std::string, CompressedLayer>& layers, double tau) {
  CompressionStats stats;
  stats.tau = tau;
  for (const auto& [name, layer] : layers) {
    stats.dense_param_count += layer.dense_params();
    stats.stored_param_count += layer.stored_params();
    stats.per_layer_rank[name] = layer.rank();
  }
  return stats;
}

double zero_energy_threshold(std::uint64_t numel) noexcept {
  return 1e-12 * std::sqrt(static_cast<double>(numel));
}

void check_tau(double tau) {
  if (!(tau > 0.0 && tau <= 1.0))
    raise(ErrorCode::InvalidTau, "energy threshold tau must lie in (0, 1], got " + std::to_string(tau));
}

EnergyProfile cumulative_energy(std::span<const double> sigma, EnergyMode mode, double zero_threshold) {
  if (sigma.empty()) raise(ErrorCode::InvalidArgument, "empty singular value sequence");
  double linear_total = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (!(sigma[i] >= 0.0) || !std::isfinite(sigma[i]))
      raise(ErrorCode::InvalidArgument, "singular values must be finite and non-negative");
    if (i > 0 && sigma[i] > sigma[i - 1])
      raise(ErrorCode::InvalidArgument, "singular values must be non-increasing");
    linear_total += sigma[i];
  }
  if (linear_total <= zero_threshold)
    raise(ErrorCode::ZeroEnergy, "total singular value mass " + std::to_string(linear_total) +
                                     " is at or below the zero-energy threshold");

  EnergyProfile profile;
  profile.sigma.assign(sigma.begin(), sigma.end());
  profile.mode = mode;
  profile.cumulative.resize(sigma.size());
  // Prefix sums run in one fixed order and the total is the last prefix, so the
  // last non-zero term lands on exactly 1.
  double prefix = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    prefix += mode == EnergyMode::Linear ? sigma[i] : sigma[i] * sigma[i];
    profile.cumulative[i] = prefix;
  }
  profile.total = prefix;
  for (double& c : profile.cumulative) c /= prefix;
  return profile;
}

std::size_t select_rank(const EnergyProfile& profile, double tau) {
  check_tau(tau);
  const auto nonzero = static_cast<std::size_t>(
      std::count_if(profile.sigma.begin(), profile.sigma.end(), [](double s) { return s > 0.0; }));
  if (tau == 1.0) return std::max<std::size_t>(nonzero, 1);
  const auto it = std::find_if(profile.cumulative.begin(), profile.cumulative.end(),
                               [tau](double e) { return e >= tau; });
  if (it == profile.cumulative.end()) return std::max<std::size_t>(nonzero, 1);
  return static_cast<std::size_t>(it - profile.cumulative.begin()) + 1;
}

Matrix compute_delta(const Matrix& w_ft, const Matrix& w_pre) {
  if (w_ft.rows() != w_pre.rows() || w_ft.cols() != w_pre.cols())
    raise(ErrorCode::DimensionMismatch,
          "delta of " + std::to_string(w_ft.rows()) + "x" + std::to_string(w_ft.cols()) + " and " +
              std::to_string(w_pre.rows()) + "x" + std::to_string(w_pre.cols()));
  Matrix delta(w_ft.rows(), w_ft.cols());
  simd::kernels().subtract(w_ft.values(), w_pre.values(), delta.values());
  return delta;
}

LayerPayload factorize_layer(const Matrix& delta, double tau, EnergyMode mode) {
  check_tau(tau);
  const std::size_t d = delta.rows();
  const std::size_t k = delta.cols();
  SvdResult usv = svd(delta);

  double mass = 0.0;
  for (double s : usv.sigma) mass += s;
  if (mass <= zero_energy_threshold(static_cast<std::uint64_t>(d) * k)) return Unchanged{};

  const EnergyProfile profile = cumulative_energy(usv.sigma, mode);
  const std::size_t t = select_rank(profile, tau);
  if (static_cast<std::uint64_t>(t) * (d + k) >= static_cast<std::uint64_t>(d) * k) return Dense{delta, false};

  Factors f{Matrix(d, t), Matrix(t, k), t};
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < t; ++c) f.a(r, c) = usv.u(r, c) * usv.sigma[c];
  for (std::size_t r = 0; r < t; ++r)
    std::copy(usv.vt.row(r).begin(), usv.vt.row(r).end(), f.b.row(r).begin());
  return f;
}

DeltaArchive compress_checkpoint(const Checkpoint& pre, const Checkpoint& ft, const CompressOptions& options) {
  check_tau(options.tau);
  const bool strict = options.policy == MismatchPolicy::Strict;

  DeltaArchive archive;
  archive.tau = options.tau;
  archive.energy_mode = options.energy_mode;

  std::vector<const TensorRecord*> shared;
  std::vector<const TensorRecord*> ft_only;
  for (const auto& [name, record] : ft.tensors) {
    const TensorRecord* base = pre.find(name);
    if (base == nullptr) {
      if (strict)
        raise(ErrorCode::LayerSetMismatch, "layer " + quoted(name) + " exists only in the fine-tuned checkpoint");
      ft_only.push_back(&record);
      continue;
    }
    if (base->shape != record.shape)
      raise(ErrorCode::ShapeMismatch, "layer " + quoted(name) + ": base shape " + shape_string(base->shape) +
                                          " vs fine-tuned shape " + shape_string(record.shape));
    shared.push_back(&record);
  }
  for (const auto& [name, record] : pre.tensors) {
    if (ft.find(name) != nullptr) continue;
    if (strict)
      raise(ErrorCode::LayerSetMismatch, "layer " + quoted(name) + " exists only in the base checkpoint");
    archive.layers.emplace(name, CompressedLayer{name, record.shape, record.dtype, Unchanged{}});
    ++archive.mismatch_warnings;
  }

  std::vector<CompressedLayer> results(shared.size());
  parallel_for(shared.size(), options.threads, [&](std::size_t i) {
    const TensorRecord& record = *shared[i];
    results[i] = compress_layer(*pre.find(record.name), record, options.tau, options.energy_mode);
  });
  for (auto& layer : results) archive.layers.emplace(layer.name, std::move(layer));
  for (const TensorRecord* record : ft_only) {
    archive.layers.emplace(record->name, standalone_layer(*record));
    ++archive.mismatch_warnings;
  }

  archive.base_fingerprint = fingerprint(pre);
  archive.stats = compute_stats(archive.layers, archive.tau);
  return archive;
}

Checkpoint reconstruct_checkpoint(const Checkpoint& base, const DeltaArchive& archive,
                                  const ReconstructOptions& options) {
  if (!options.force) {
    const std::string actual = fingerprint(base);
    if (actual != archive.base_fingerprint)
      raise(ErrorCode::FingerprintMismatch, "base checkpoint fingerprint " + actual +
                                                " does not match archive fingerprint " +
                                                archive.base_fingerprint);
  }

  std::vector<std::string> names;
  for (const auto& [name, record] : base.tensors) names.push_back(name);
  for (const auto& [name, layer] : archive.layers)
    if (base.find(name) == nullptr) names.push_back(name);

  std::vector<TensorRecord> out(names.size());
  parallel_for(names.size(), options.threads, [&](std::size_t i) {
    const TensorRecord* record = base.find(names[i]);
    const auto it = archive.layers.find(names[i]);
    out[i] = it == archive.layers.end() ? *record : apply_layer(record, it->second);
  });

  Checkpoint result;
  result.metadata = base.metadata;
  for (auto& record : out) result.add(std::move(record));
  return result;
}

}  // namespace dsvd
