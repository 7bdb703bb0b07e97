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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "latent_steer/models.hpp"

namespace latent_steer {

using Bytes = std::vector<std::uint8_t>;

std::string base64_encode(const Bytes& data);
// Throws Error on characters outside the standard alphabet or bad padding.
Bytes base64_decode(std::string_view text);

// Little-endian IEEE-754 binary32 payload, base64 encoded.
std::string encode_float32(const Vector& values);
// Throws Error when the payload does not hold exactly `expected` floats.
Vector decode_float32(std::string_view payload, Index expected);

// 8-bit grayscale PNG: values clamped to [0,1], scaled by 255, rounded half up.
Bytes encode_png(const Image& img);
// Accepts any PNG colour type; colour is reduced to luma. Throws Error on
// undecodable input.
Image decode_png(const Bytes& png);

// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_file_atomic(const std::filesystem::path& path, const Bytes& contents);
std::string read_file(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);

}  // namespace latent_steer
