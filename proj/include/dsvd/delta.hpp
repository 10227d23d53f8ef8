// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dsvd/matrix.hpp"
#include "dsvd/tensor_store.hpp"

namespace dsvd {

inline constexpr int kFormatVersion = 1;

/// Linear: E(t) = sum_{i<=t} sigma_i / sum_i sigma_i (the default).
/// Squared: the same ratio over sigma_i^2.
enum class EnergyMode { Linear, Squared };
std::string_view to_string(EnergyMode mode) noexcept;
EnergyMode parse_energy_mode(std::string_view text);

enum class MismatchPolicy { Strict, SkipMismatched };

struct EnergyProfile {
  std::vector<double> sigma;
  std::vector<double> cumulative;  // cumulative[t-1] = E(t)
  double total = 0.0;              // sum of the energy terms
  EnergyMode mode = EnergyMode::Linear;
};

/// Noise floor below which a delta counts as unchanged: 1e-12 * sqrt(numel),
/// compared against sum(sigma).
double zero_energy_threshold(std::uint64_t numel) noexcept;

/// Throws ZeroEnergy when sum(sigma) <= zero_threshold, InvalidArgument when
/// sigma is empty, negative or increasing.
EnergyProfile cumulative_energy(std::span<const double> sigma, EnergyMode mode = EnergyMode::Linear,
                                double zero_threshold = 0.0);

/// Smallest t >= 1 with E(t) >= tau. At tau == 1 this is the number of
/// non-zero singular values. Throws InvalidTau unless 0 < tau <= 1.
std::size_t select_rank(const EnergyProfile& profile, double tau);

void check_tau(double tau);

struct Factors {
  Matrix a;  // d x t, U_t * diag(sigma_1..t)
  Matrix b;  // t x k, V_t^T
  std::size_t rank = 0;
};

/// Full delta. `standalone` marks a tensor with no counterpart in the base;
/// `delta` then holds the fine-tuned values themselves.
struct Dense {
  Matrix delta;
  bool standalone = false;
};

struct Unchanged {};

using LayerPayload = std::variant<Factors, Dense, Unchanged>;

enum class LayerKind { Factors, Dense, Standalone, Unchanged };
std::string_view to_string(LayerKind kind) noexcept;
LayerKind parse_layer_kind(std::string_view text);

struct CompressedLayer {
  std::string name;
  Shape original_shape;
  Dtype original_dtype = Dtype::F32;
  LayerPayload payload = Unchanged{};

  LayerKind kind() const noexcept;
  /// t for factors, min(d, k) for dense layers, 0 when unchanged.
  std::size_t rank() const;
  /// d*k for changed layers, 0 when unchanged.
  std::uint64_t dense_params() const;
  /// t*(d+k) for factors, d*k for dense layers, 0 when unchanged.
  std::uint64_t stored_params() const;
};

struct CompressionStats {
  std::uint64_t dense_param_count = 0;
  std::uint64_t stored_param_count = 0;
  std::map<std::string, std::size_t> per_layer_rank;
  double tau = 0.0;
};

struct DeltaArchive {
  std::map<std::string, CompressedLayer> layers;
  double tau = 1.0;
  EnergyMode energy_mode = EnergyMode::Linear;
  std::string base_fingerprint;
  int format_version = kFormatVersion;
  CompressionStats stats;
  /// Layers recorded under MismatchPolicy::SkipMismatched.
  std::size_t mismatch_warnings = 0;
};

CompressionStats compute_stats(const std::map<std::string, CompressedLayer>& layers, double tau);

/// ft - pre. Throws DimensionMismatch on differing shapes.
Matrix compute_delta(const Matrix& w_ft, const Matrix& w_pre);

/// SVD, energy-based rank selection and the storage test. Factors only when
/// t*(d+k) < d*k; Dense otherwise; Unchanged when the delta energy is below
/// the noise floor.
LayerPayload factorize_layer(const Matrix& delta, double tau, EnergyMode mode = EnergyMode::Linear);

struct CompressOptions {
  double tau = 1.0;
  MismatchPolicy policy = MismatchPolicy::Strict;
  EnergyMode energy_mode = EnergyMode::Linear;
  std::size_t threads = 1;
};

/// Layers are processed independently; the archive does not depend on the
/// thread count.
DeltaArchive compress_checkpoint(const Checkpoint& pre, const Checkpoint& ft, const CompressOptions& options);

struct ReconstructOptions {
  bool force = false;  // skip the base fingerprint check
  std::size_t threads = 1;
};

Checkpoint reconstruct_checkpoint(const Checkpoint& base, const DeltaArchive& archive,
                                  const ReconstructOptions& options = {});

}  // namespace dsvd
