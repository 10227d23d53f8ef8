// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include <json.hpp>

#include "dsvd/error.hpp"
#include "dsvd/tensor_store.hpp"
#include "test_support.hpp"

using namespace dsvd;
using namespace dsvd::testing;

namespace {

ErrorCode read_error(const std::string& name) {
  try {
    read_checkpoint(fixture(name));
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << name << " was accepted";
  return ErrorCode::InvalidArgument;
}

std::vector<std::byte> bytes_of(const std::string& s) {
  const auto* p = reinterpret_cast<const std::byte*>(s.data());
  return {p, p + s.size()};
}

}  // namespace

TEST(ReadCheckpoint, SingleF32Fixture) {
  const Checkpoint c = read_checkpoint(fixture("single_f32.safetensors"));
  ASSERT_EQ(c.tensors.size(), 1u);
  const TensorRecord& w = c.tensors.at("w");
  EXPECT_EQ(w.name, "w");
  EXPECT_EQ(w.dtype, Dtype::F32);
  EXPECT_EQ(w.shape, (Shape{2, 2}));
  EXPECT_EQ(w.to_doubles(), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_TRUE(c.metadata.empty());
}

// Field-by-field check of the raw layout, independent of the parser.
TEST(ReadCheckpoint, FixtureHeaderLayout) {
  const std::string raw = slurp(fixture("single_f32.safetensors"));
  std::uint64_t n = 0;
  std::memcpy(&n, raw.data(), 8);
  ASSERT_EQ(raw.size(), 8 + n + 16);
  const auto header = nlohmann::json::parse(raw.substr(8, n));
  EXPECT_EQ(header.size(), 1u);
  EXPECT_EQ(header["w"]["dtype"], "F32");
  EXPECT_EQ(header["w"]["shape"], nlohmann::json::array({2, 2}));
  EXPECT_EQ(header["w"]["data_offsets"], nlohmann::json::array({0, 16}));
  float values[4];
  std::memcpy(values, raw.data() + 8 + n, 16);
  EXPECT_EQ(values[0], 1.0f);
  EXPECT_EQ(values[3], 4.0f);
}

TEST(ReadCheckpoint, F16AndMetadataFixture) {
  const Checkpoint c = read_checkpoint(fixture("mixed_meta.safetensors"));
  EXPECT_EQ(c.metadata, (std::map<std::string, std::string>{{"format", "pt"}, {"note", "fixture"}}));
  const TensorRecord& a = c.tensors.at("a");
  EXPECT_EQ(a.dtype, Dtype::F16);
  EXPECT_EQ(a.data.size(), 6u);  // retained as F16
  const auto v = a.to_doubles();
  EXPECT_EQ(v[0], 1.0);
  EXPECT_EQ(v[1], -2.5);
  EXPECT_EQ(v[2], 0.0999755859375);  // nearest half to 0.1
  EXPECT_EQ(c.tensors.at("b").to_doubles(), (std::vector<double>{0.5, -0.25}));
}

TEST(ReadCheckpoint, EmptyHeader) {
  const Checkpoint c = read_checkpoint(fixture("empty.safetensors"));
  EXPECT_TRUE(c.tensors.empty());
  EXPECT_TRUE(c.metadata.empty());
}

TEST(ReadCheckpoint, MalformedFixtures) {
  EXPECT_EQ(read_error("bad_header_length.safetensors"), ErrorCode::MalformedHeader);
  EXPECT_EQ(read_error("bad_json.safetensors"), ErrorCode::MalformedHeader);
  EXPECT_EQ(read_error("bad_out_of_bounds.safetensors"), ErrorCode::MalformedHeader);
  EXPECT_EQ(read_error("bad_overlap.safetensors"), ErrorCode::MalformedHeader);
  EXPECT_EQ(read_error("bad_gap.safetensors"), ErrorCode::MalformedHeader);
  EXPECT_EQ(read_error("bad_size.safetensors"), ErrorCode::MalformedHeader);
  EXPECT_EQ(read_error("bad_dtype.safetensors"), ErrorCode::UnsupportedDtype);
  EXPECT_EQ(read_error("duplicate_name.safetensors"), ErrorCode::DuplicateName);
}

TEST(ReadCheckpoint, TruncatedAndMissingFiles) {
  EXPECT_THROW(parse_checkpoint(bytes_of("abc")), Error);
  try {
    read_checkpoint("/nonexistent/file.safetensors");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoFailure);
  }
}

TEST(ReadCheckpoint, RejectsNonStringMetadataAndNegativeDims) {
  auto build = [](const std::string& header) {
    std::string out(8, '\0');
    const std::uint64_t n = header.size();
    std::memcpy(out.data(), &n, 8);
    return bytes_of(out + header);
  };
  EXPECT_THROW(parse_checkpoint(build(R"({"__metadata__":{"k":1}})")), Error);
  EXPECT_THROW(parse_checkpoint(build(R"({"w":{"dtype":"F32","shape":[-1],"data_offsets":[0,0]}})")), Error);
  EXPECT_THROW(parse_checkpoint(build(R"([1,2])")), Error);
}

TEST(WriteCheckpoint, FixturesRoundTripByteIdentically) {
  for (const char* name : {"single_f32.safetensors", "mixed_meta.safetensors", "empty.safetensors"}) {
    SCOPED_TRACE(name);
    const std::string original = slurp(fixture(name));
    const auto rewritten = serialize_checkpoint(read_checkpoint(fixture(name)));
    EXPECT_EQ(std::string(reinterpret_cast<const char*>(rewritten.data()), rewritten.size()), original);
  }
}

TEST(WriteCheckpoint, LexicographicOrderOnDisk) {
  TempDir dir;
  Checkpoint c;
  c.add(record_from("zeta", {1}, {1}));
  c.add(record_from("alpha", {2}, {2, 3}));
  write_checkpoint(c, dir / "c.safetensors");
  const Checkpoint back = read_checkpoint(dir / "c.safetensors");
  EXPECT_EQ(back, c);
  std::vector<std::string> names;
  for (const auto& [name, t] : back.tensors) names.push_back(name);
  EXPECT_EQ(names, (std::vector<std::string>{"alpha", "zeta"}));
  const std::string raw = slurp(dir / "c.safetensors");
  EXPECT_LT(raw.find("alpha"), raw.find("zeta"));
  // alpha's payload comes first.
  float first;
  std::uint64_t n;
  std::memcpy(&n, raw.data(), 8);
  std::memcpy(&first, raw.data() + 8 + n, 4);
  EXPECT_EQ(first, 2.0f);
}

TEST(WriteCheckpoint, RejectsInconsistentRecordBeforeWriting) {
  TempDir dir;
  Checkpoint c;
  TensorRecord bad = record_from("w", {2, 2}, {1, 2, 3, 4});
  bad.shape = {3, 2};
  c.tensors.emplace("w", bad);
  EXPECT_THROW(write_checkpoint(c, dir / "bad.safetensors"), Error);
  EXPECT_FALSE(std::filesystem::exists(dir / "bad.safetensors"));
}

TEST(WriteCheckpoint, UnwritablePath) {
  Checkpoint c;
  c.add(record_from("w", {1}, {1}));
  try {
    write_checkpoint(c, "/nonexistent-dir/x.safetensors");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoFailure);
  }
}

TEST(Checkpoint, DuplicateAddRejected) {
  Checkpoint c;
  c.add(record_from("w", {1}, {1}));
  try {
    c.add(record_from("w", {1}, {2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateName);
  }
}

// Random checkpoints (mixed dtypes, scalars, empty tensors, metadata) survive
// write -> read unchanged.
TEST(WriteCheckpoint, RandomRoundTripProperty) {
  TempDir dir;
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> rank_dist(0, 4), dim_dist(0, 5), coin(0, 1);
  for (int trial = 0; trial < 25; ++trial) {
    Checkpoint c;
    const int count = 1 + trial % 6;
    for (int i = 0; i < count; ++i) {
      Shape shape(rank_dist(rng));
      for (auto& d : shape) d = dim_dist(rng);
      c.add(random_record("t" + std::to_string(i) + "." + std::to_string(trial), shape, rng, 1.0,
                          coin(rng) ? Dtype::F16 : Dtype::F32));
    }
    if (coin(rng)) c.metadata["k" + std::to_string(trial)] = "value \"quoted\" é";
    const auto path = dir / ("r" + std::to_string(trial) + ".safetensors");
    write_checkpoint(c, path);
    ASSERT_EQ(read_checkpoint(path), c);
  }
}

TEST(AsMatrix, ReshapeRules) {
  std::mt19937_64 rng(3);
  const auto w = random_record("w", {4, 3}, rng);
  const Matrix m = as_matrix(w);
  EXPECT_EQ(m.rows(), 4u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(std::vector<double>(m.values().begin(), m.values().end()), w.to_doubles());

  const Matrix conv = as_matrix(random_record("k", {8, 4, 3, 3}, rng));
  EXPECT_EQ(conv.rows(), 8u);
  EXPECT_EQ(conv.cols(), 36u);

  const Matrix bias = as_matrix(random_record("b", {5}, rng));
  EXPECT_EQ(bias.rows(), 5u);
  EXPECT_EQ(bias.cols(), 1u);

  EXPECT_THROW(as_matrix(random_record("s", {}, rng)), Error);
}

// Matrix view -> back to the original shape reproduces the element sequence.
TEST(AsMatrix, ReshapeIsLossless) {
  std::mt19937_64 rng(4);
  for (const Shape& shape : {Shape{3}, Shape{2, 5}, Shape{4, 2, 3}, Shape{2, 3, 2, 2}}) {
    for (Dtype dtype : {Dtype::F32, Dtype::F16}) {
      const auto t = random_record("x", shape, rng, 1.0, dtype);
      const Matrix m = as_matrix(t);
      EXPECT_EQ(TensorRecord::from_doubles("x", dtype, shape, m.values()), t);
    }
  }
}
