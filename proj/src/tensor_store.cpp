// SPDX-License-Identifier: Apache-2.0
#include "dsvd/tensor_store.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "dsvd/error.hpp"
#include "dsvd/half.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor payloads are read and written in host byte order");

namespace dsvd {
namespace {

using nlohmann::json;

constexpr std::string_view kMetadataKey = "__metadata__";

[[noreturn]] void malformed(const std::string& why) {
  raise(ErrorCode::MalformedHeader, "malformed checkpoint header: " + why);
}

std::uint64_t read_u64_le(std::span<const std::byte> bytes) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | std::to_integer<std::uint64_t>(bytes[i]);
  return v;
}

std::array<std::byte, 8> u64_le(std::uint64_t v) {
  std::array<std::byte, 8> out;
  for (auto& b : out) {
    b = static_cast<std::byte>(v & 0xffu);
    v >>= 8;
  }
  return out;
}

std::string build_header(const Checkpoint& ckpt, bool include_metadata) {
  json header = json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, record] : ckpt.tensors) {
    const std::uint64_t end = offset + record.data.size();
    header[name] = {{"dtype", std::string(to_string(record.dtype))},
                    {"shape", record.shape},
                    {"data_offsets", {offset, end}}};
    offset = end;
  }
  if (include_metadata && !ckpt.metadata.empty()) header[std::string(kMetadataKey)] = ckpt.metadata;
  return header.dump();
}

struct Span {
  std::uint64_t begin;
  std::uint64_t end;
  std::string name;
};

}  // namespace

std::size_t element_size(Dtype dtype) noexcept { return dtype == Dtype::F32 ? 4 : 2; }

std::string_view to_string(Dtype dtype) noexcept { return dtype == Dtype::F32 ? "F32" : "F16"; }

Dtype parse_dtype(std::string_view tag) {
  if (tag == "F32") return Dtype::F32;
  if (tag == "F16") return Dtype::F16;
  raise(ErrorCode::UnsupportedDtype, "unsupported dtype '" + std::string(tag) + "'");
}

std::uint64_t element_count(const Shape& shape) {
  std::uint64_t n = 1;
  for (std::uint64_t d : shape) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d)
      raise(ErrorCode::InvalidArgument, "shape " + shape_string(shape) + " overflows");
    n *= d;
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void TensorRecord::validate() const {
  if (name.empty()) raise(ErrorCode::InvalidArgument, "tensor with empty name");
  const std::uint64_t expected = numel() * element_size(dtype);
  if (data.size() != expected)
    raise(ErrorCode::InvalidArgument, "tensor '" + name + "' shape " + shape_string(shape) +
                                          " needs " + std::to_string(expected) +
                                          " bytes, buffer holds " + std::to_string(data.size()));
}

std::vector<double> TensorRecord::to_doubles() const {
  const std::size_t n = data.size() / element_size(dtype);
  std::vector<double> out(n);
  if (dtype == Dtype::F32) {
    for (std::size_t i = 0; i < n; ++i) {
      float f;
      std::memcpy(&f, data.data() + 4 * i, 4);
      out[i] = f;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint16_t h;
      std::memcpy(&h, data.data() + 2 * i, 2);
      out[i] = half_to_double(h);
    }
  }
  return out;
}

TensorRecord TensorRecord::from_doubles(std::string name, Dtype dtype, Shape shape,
                                        std::span<const double> values) {
  TensorRecord t{std::move(name), dtype, std::move(shape), {}};
  if (values.size() != t.numel())
    raise(ErrorCode::InvalidArgument, "tensor '" + t.name + "' shape " + shape_string(t.shape) +
                                          " given " + std::to_string(values.size()) + " values");
  t.data.resize(values.size() * element_size(dtype));
  if (dtype == Dtype::F32) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const float f = static_cast<float>(values[i]);
      std::memcpy(t.data.data() + 4 * i, &f, 4);
    }
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const std::uint16_t h = double_to_half(values[i]);
      std::memcpy(t.data.data() + 2 * i, &h, 2);
    }
  }
  return t;
}

void Checkpoint::add(TensorRecord record) {
  std::string key = record.name;
  if (key == kMetadataKey) raise(ErrorCode::InvalidArgument, "tensor name '__metadata__' is reserved");
  if (!tensors.emplace(key, std::move(record)).second)
    raise(ErrorCode::DuplicateName, "duplicate tensor name '" + key + "'");
}

const TensorRecord* Checkpoint::find(const std::string& name) const {
  const auto it = tensors.find(name);
  return it == tensors.end() ? nullptr : &it->second;
}

Checkpoint parse_checkpoint(std::span<const std::byte> bytes) {
  if (bytes.size() < 8) malformed("file shorter than the 8-byte length prefix");
  const std::uint64_t header_len = read_u64_le(bytes.first(8));
  if (header_len > bytes.size() - 8)
    malformed("header length " + std::to_string(header_len) + " exceeds file size " +
              std::to_string(bytes.size()));

  const auto header_bytes = bytes.subspan(8, header_len);
  const std::string_view header_text(reinterpret_cast<const char*>(header_bytes.data()),
                                     header_bytes.size());
  std::set<std::string> seen;
  std::string duplicate;
  json header;
  try {
    header = json::parse(header_text, [&](int depth, json::parse_event_t event, json& parsed) {
      if (depth == 1 && event == json::parse_event_t::key) {
        auto key = parsed.get<std::string>();
        if (!seen.insert(key).second && duplicate.empty()) duplicate = key;
      }
      return true;
    });
  } catch (const json::exception& e) {
    malformed(std::string("invalid JSON: ") + e.what());
  }
  if (!duplicate.empty()) raise(ErrorCode::DuplicateName, "duplicate tensor name '" + duplicate + "'");
  if (!header.is_object()) malformed("header is not a JSON object");

  const auto data = bytes.subspan(8 + header_len);
  Checkpoint ckpt;
  std::vector<Span> spans;
  for (const auto& [name, entry] : header.items()) {
    if (name == kMetadataKey) {
      if (!entry.is_object()) malformed("__metadata__ is not an object");
      for (const auto& [key, value] : entry.items()) {
        if (!value.is_string()) malformed("metadata value for '" + key + "' is not a string");
        ckpt.metadata.emplace(key, value.get<std::string>());
      }
      continue;
    }
    if (name.empty()) malformed("empty tensor name");
    if (!entry.is_object() || !entry.contains("dtype") || !entry.contains("shape") ||
        !entry.contains("data_offsets"))
      malformed("tensor '" + name + "' lacks dtype/shape/data_offsets");
    const auto& dtype = entry.at("dtype");
    const auto& shape = entry.at("shape");
    const auto& offsets = entry.at("data_offsets");
    if (!dtype.is_string()) malformed("tensor '" + name + "' dtype is not a string");
    if (!shape.is_array()) malformed("tensor '" + name + "' shape is not an array");
    if (!offsets.is_array() || offsets.size() != 2 || !offsets[0].is_number_unsigned() ||
        !offsets[1].is_number_unsigned())
      malformed("tensor '" + name + "' data_offsets must be two non-negative integers");

    TensorRecord record;
    record.name = name;
    record.dtype = parse_dtype(dtype.get<std::string>());
    for (const auto& dim : shape) {
      if (!dim.is_number_unsigned()) malformed("tensor '" + name + "' has a non-integer dimension");
      record.shape.push_back(dim.get<std::uint64_t>());
    }
    const auto begin = offsets[0].get<std::uint64_t>();
    const auto end = offsets[1].get<std::uint64_t>();
    if (begin > end || end > data.size())
      malformed("tensor '" + name + "' offsets [" + std::to_string(begin) + "," +
                std::to_string(end) + "] out of bounds for " + std::to_string(data.size()) +
                "-byte payload");
    std::uint64_t expected;
    try {
      expected = record.numel() * element_size(record.dtype);
    } catch (const Error&) {
      malformed("tensor '" + name + "' shape overflows");
    }
    if (end - begin != expected)
      malformed("tensor '" + name + "' spans " + std::to_string(end - begin) + " bytes, shape " +
                shape_string(record.shape) + " needs " + std::to_string(expected));
    const auto payload = data.subspan(begin, end - begin);
    record.data.assign(payload.begin(), payload.end());
    spans.push_back({begin, end, name});
    ckpt.tensors.emplace(name, std::move(record));
  }

  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
  });
  std::uint64_t cursor = 0;
  for (const auto& s : spans) {
    if (s.begin < cursor) malformed("tensor '" + s.name + "' overlaps the previous tensor");
    if (s.begin > cursor) malformed("gap in payload before tensor '" + s.name + "'");
    cursor = s.end;
  }
  if (cursor != data.size())
    malformed(std::to_string(data.size() - cursor) + " trailing payload bytes not owned by any tensor");
  return ckpt;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> bytes(size);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size)))
    raise(ErrorCode::IoFailure, "cannot read '" + path.string() + "'");
  return parse_checkpoint(bytes);
}

void serialize_checkpoint(const Checkpoint& ckpt, const ByteSink& sink, bool include_metadata) {
  for (const auto& [name, record] : ckpt.tensors) {
    if (name != record.name)
      raise(ErrorCode::InvalidArgument, "tensor keyed '" + name + "' is named '" + record.name + "'");
    record.validate();
  }
  const std::string header = build_header(ckpt, include_metadata);
  const auto prefix = u64_le(header.size());
  sink(prefix);
  sink(std::as_bytes(std::span(header.data(), header.size())));
  for (const auto& [name, record] : ckpt.tensors) sink(record.data);
}

std::vector<std::byte> serialize_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::byte> out;
  serialize_checkpoint(ckpt, [&](std::span<const std::byte> chunk) {
    out.insert(out.end(), chunk.begin(), chunk.end());
  });
  return out;
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
}

std::pair<std::size_t, std::size_t> matrix_dims(const Shape& shape) {
  if (shape.empty()) return {1, 1};
  const std::uint64_t rows = shape[0];
  const std::uint64_t cols = element_count(Shape(shape.begin() + 1, shape.end()));
  return {static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)};
}

Matrix as_matrix(const TensorRecord& t) {
  if (t.shape.empty()) raise(ErrorCode::InvalidArgument, "as_matrix needs at least one dimension ('" + t.name + "')");
  t.validate();
  const auto [rows, cols] = matrix_dims(t.shape);
  return Matrix(rows, cols, t.to_doubles());
}

}  // namespace dsvd
