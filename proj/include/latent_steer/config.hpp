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
#include <optional>
#include <string>
#include <string_view>

#include "latent_steer/evaluation.hpp"
#include "latent_steer/inversion.hpp"
#include "latent_steer/trainer.hpp"
#include "latent_steer/transforms.hpp"

namespace latent_steer {

inline constexpr const char* kSeedEnvVar = "LATENT_STEER_SEED";

struct EvalSettings {
  int n_images = 200;
  int repeats = 3;
  int probe = 256;
};

struct PathsConfig {
  std::string checkpoint_dir = "checkpoints";
  std::string report_dir = "reports";
};

// Everything a command needs. JSON layout:
//
//   {
//     "world": "toy",
//     "seed": 0,
//     "transform": {"kind": "global-linear", "normalize": false, "scale": 3.0},
//     "train": {"iterations": 2000, "batch_size": 4, "learning_rate": 0.01,
//               "beta1": 0.9, "beta2": 0.999, "eps": 1e-8,
//               "sampling": {"mode": "joint"}, "reg_mode": "standard",
//               "checkpoint_interval": 0, "grad_clip": 0},
//     "weights": {"reg": 10, "disc": 0.05, "content": 0.001},
//     "bins": [0, 0.3, 0.6, 0.9],
//     "eval": {"n_images": 200, "repeats": 3, "probe": 256},
//     "inversion": {"steps": 500, "learning_rate": 0.05, "restarts": 3, "content_weight": 0},
//     "paths": {"checkpoint_dir": "checkpoints", "report_dir": "reports"}
//   }
//
// Every key is optional; unknown keys are rejected.
struct RunConfig {
  std::string world = "toy";
  TransformKind transform = TransformKind::kGlobalLinear;
  Normalization normalization;
  TrainConfig train;  // train.seed mirrors the top-level seed
  BinSpec bins;
  EvalSettings eval;
  InversionConfig inversion;
  PathsConfig paths;

  std::uint64_t seed() const { return train.seed; }
  void set_seed(std::uint64_t seed);
};

// Throws ConfigError naming the offending field on malformed JSON, unknown
// keys, wrong types or invalid values.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string dump_run_config(const RunConfig& cfg);

// Applies LATENT_STEER_SEED when set. Throws ConfigError on a malformed value.
void apply_seed_override(RunConfig& cfg);
void apply_seed_override(RunConfig& cfg, const char* value);

// Builds the frozen collaborators of a world id. Only "toy" is built in.
ModelBundle make_world(std::string_view world);

}  // namespace latent_steer
