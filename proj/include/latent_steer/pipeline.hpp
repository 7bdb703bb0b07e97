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

#include "latent_steer/config.hpp"
#include "latent_steer/transforms.hpp"

namespace latent_steer {

// Initial T for a run, drawn from a stream of the run seed that the training
// batches never touch.
TransformModule initial_transform(const RunConfig& cfg, const ModelBundle& bundle);

// Evaluation seeds derived from the run seed. Each is disjoint from the
// training stream and from the others.
std::uint64_t probe_seed(std::uint64_t run_seed);
std::uint64_t leakage_seed(std::uint64_t run_seed);
std::uint64_t selection_seed(std::uint64_t run_seed);

}  // namespace latent_steer
