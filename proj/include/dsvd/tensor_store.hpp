// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsvd/matrix.hpp"

namespace dsvd {

enum class Dtype { F32, F16 };

std::size_t element_size(Dtype dtype) noexcept;
std::string_view to_string(Dtype dtype) noexcept;
/// Throws UnsupportedDtype for anything but "F32" / "F16".
Dtype parse_dtype(std::string_view tag);

using Shape = std::vector<std::uint64_t>;

/// Product of the dimensions; 1 for a scalar. Throws InvalidArgument on overflow.
std::uint64_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

/// One named dense tensor. `data` holds little-endian elements in row-major order.
struct TensorRecord {
  std::string name;
  Dtype dtype = Dtype::F32;
  Shape shape;
  std::vector<std::byte> data;

  std::uint64_t numel() const { return element_count(shape); }

  /// Throws InvalidArgument when the name is empty or the buffer length does
  /// not match the shape.
  void validate() const;

  /// Widens every element to double.
  std::vector<double> to_doubles() const;

  /// Narrows `values` into a record of the given dtype (round to nearest even).
  static TensorRecord from_doubles(std::string name, Dtype dtype, Shape shape,
                                   std::span<const double> values);

  friend bool operator==(const TensorRecord&, const TensorRecord&) = default;
};

/// Named tensors plus free-form string metadata. Tensors iterate in
/// lexicographic name order.
struct Checkpoint {
  std::map<std::string, TensorRecord> tensors;
  std::map<std::string, std::string> metadata;

  /// Throws DuplicateName if the name is already present.
  void add(TensorRecord record);
  const TensorRecord* find(const std::string& name) const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

Checkpoint read_checkpoint(const std::filesystem::path& path);
Checkpoint parse_checkpoint(std::span<const std::byte> bytes);

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
std::vector<std::byte> serialize_checkpoint(const Checkpoint& ckpt);

/// Streams the container bytes to `sink` in order: length prefix, header,
/// then each payload. Used for hashing without a full in-memory copy.
using ByteSink = std::function<void(std::span<const std::byte>)>;
void serialize_checkpoint(const Checkpoint& ckpt, const ByteSink& sink, bool include_metadata = true);

/// Rows/cols used to view a tensor of this shape as a matrix:
/// [d0, d1] as-is, [d0, d1, ...] as [d0, d1*...], [d0] as [d0, 1], [] as [1, 1].
std::pair<std::size_t, std::size_t> matrix_dims(const Shape& shape);

/// Requires at least one dimension.
Matrix as_matrix(const TensorRecord& t);

}  // namespace dsvd
