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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "latent_steer/config.hpp"
#include "latent_steer/trainer.hpp"
#include "latent_steer/transforms.hpp"

namespace latent_steer {

inline constexpr int kCheckpointFormatVersion = 1;

enum class CheckpointKind {
  kTransform,  // trained TransformModule
  kToyOracle,  // closed-form toy directions, no parameters
};

// JSON envelope; float arrays are base64 of little-endian float32.
struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  CheckpointKind kind = CheckpointKind::kTransform;
  std::optional<TransformModule> transform;
  std::optional<AdamState> optimizer;
  long iteration = 0;  // completed training iterations
  RunConfig config;
  std::vector<std::string> attribute_names;

  Index latent_dim() const;
  Index num_attributes() const;
};

Checkpoint make_checkpoint(const TransformModule& transform, const AdamState& optimizer, long iteration,
                           const RunConfig& config, const ModelBundle& bundle);
Checkpoint make_oracle_checkpoint(const RunConfig& config, const ModelBundle& bundle);

std::string serialize_checkpoint(const Checkpoint& ckpt);
// Throws ConfigError (field prefixed "checkpoint.") on any malformed content.
Checkpoint parse_checkpoint(std::string_view json_text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Steering described by the checkpoint. Throws DimensionError when it does
// not fit `bundle`.
std::shared_ptr<const Steering> make_steering(const Checkpoint& ckpt, const ModelBundle& bundle);

}  // namespace latent_steer
