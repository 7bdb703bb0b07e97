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

#include "latent_steer/pipeline.hpp"

#include <limits>

namespace latent_steer {

namespace {
constexpr std::uint64_t kInitStream = std::numeric_limits<std::uint64_t>::max();
}  // namespace

TransformModule initial_transform(const RunConfig& cfg, const ModelBundle& bundle) {
  SeededRng rng = SeededRng(cfg.seed()).substream(kInitStream, 0);
  return init_transform(cfg.transform, bundle.latent_dim(), bundle.num_attributes(), rng, cfg.normalization);
}

std::uint64_t probe_seed(std::uint64_t run_seed) { return run_seed ^ 0x9e3779b97f4a7c15ULL; }

std::uint64_t leakage_seed(std::uint64_t run_seed) { return run_seed ^ 0xc2b2ae3d27d4eb4fULL; }

std::uint64_t selection_seed(std::uint64_t run_seed) { return run_seed ^ 0x165667b19e3779f9ULL; }

}  // namespace latent_steer
