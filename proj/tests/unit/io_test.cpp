// Copyright 2026 The latent-steer Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "latent_steer/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "latent_steer/errors.hpp"

namespace latent_steer {
namespace {

Bytes bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

TEST(Base64, KnownVectors) {
  EXPECT_EQ(base64_encode(bytes("")), "");
  EXPECT_EQ(base64_encode(bytes("f")), "Zg==");
  EXPECT_EQ(base64_encode(bytes("fo")), "Zm8=");
  EXPECT_EQ(base64_encode(bytes("foo")), "Zm9v");
  EXPECT_EQ(base64_encode(bytes("foobar")), "Zm9vYmFy");
  EXPECT_EQ(base64_decode("Zm9vYg=="), bytes("foob"));
}

TEST(Base64, RoundTripsAllByteValues) {
  Bytes all(256);
  for (int i = 0; i < 256; ++i) all[static_cast<size_t>(i)] = static_cast<std::uint8_t>(i);
  EXPECT_EQ(base64_decode(base64_encode(all)), all);
}

TEST(Base64, RejectsMalformedInput) {
  EXPECT_THROW(base64_decode("Zm9"), Error);
  EXPECT_THROW(base64_decode("Zm9v!A=="), Error);
  EXPECT_THROW(base64_decode("Z==="), Error);
}

TEST(Float32Payload, LittleEndianBinary32) {
  Vector v(2);
  v << 1.0, -2.0;
  // 1.0f = 00 00 80 3f, -2.0f = 00 00 00 c0
  const Bytes raw = base64_decode(encode_float32(v));
  EXPECT_EQ(raw, (Bytes{0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0}));
}

TEST(Float32Payload, RoundTripIsFloatRounding) {
  SeededRng rng(1);
  const Vector v = rng.normal_vector(50);
  const Vector back = decode_float32(encode_float32(v), 50);
  for (Index i = 0; i < 50; ++i) EXPECT_EQ(back[i], static_cast<double>(static_cast<float>(v[i])));
  EXPECT_EQ(decode_float32(encode_float32(back), 50), back);
}

TEST(Float32Payload, LengthMismatchThrows) {
  EXPECT_THROW(decode_float32(encode_float32(Vector::Zero(3)), 4), Error);
}

TEST(Png, QuantizesClampsAndRoundTrips) {
  Image img(2, 3);
  img << 0.0, 0.5, 1.0, -0.2, 1.7, 0.25;
  const Image back = decode_png(encode_png(img));
  ASSERT_EQ(back.rows(), 2);
  ASSERT_EQ(back.cols(), 3);
  EXPECT_EQ(back(0, 0), 0.0);
  EXPECT_EQ(back(0, 1), 128.0 / 255.0);  // floor(127.5 + 0.5)
  EXPECT_EQ(back(0, 2), 1.0);
  EXPECT_EQ(back(1, 0), 0.0);
  EXPECT_EQ(back(1, 1), 1.0);
  EXPECT_EQ(back(1, 2), 64.0 / 255.0);  // floor(63.75 + 0.5)
  EXPECT_EQ(encode_png(back), encode_png(img));
}

TEST(Png, StartsWithTheSignatureAndRejectsGarbage) {
  const Bytes png = encode_png(Image::Zero(4, 4));
  ASSERT_GE(png.size(), 8u);
  EXPECT_EQ(png[1], 'P');
  EXPECT_EQ(png[2], 'N');
  EXPECT_EQ(png[3], 'G');
  EXPECT_THROW(decode_png(bytes("definitely not a png")), Error);
  Bytes truncated(png.begin(), png.begin() + static_cast<long>(png.size() / 2));
  EXPECT_THROW(decode_png(truncated), Error);
}

TEST(Files, AtomicWriteReplacesContents) {
  const auto dir = std::filesystem::temp_directory_path() / "latent_steer_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "a.txt";
  write_file_atomic(path, std::string_view("first"));
  write_file_atomic(path, std::string_view("second"));
  EXPECT_EQ(read_file(path), "second");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    EXPECT_EQ(entry.path().filename(), "a.txt") << "temporary file left behind";
  }
  Image img = Image::Constant(3, 3, 0.4);
  write_png(dir / "x.png", img);
  EXPECT_EQ(read_png(dir / "x.png")(1, 1), 102.0 / 255.0);
  EXPECT_THROW(read_file(dir / "missing"), Error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace latent_steer
