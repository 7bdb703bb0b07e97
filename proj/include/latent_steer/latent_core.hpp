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

#include "latent_steer/types.hpp"

namespace latent_steer {

// Anything that maps a latent and a realized attribute shift to an edited
// latent: trainable transforms and the toy world's closed-form oracle.
class Steering {
 public:
  virtual ~Steering() = default;

  virtual Index latent_dim() const = 0;
  virtual Index num_attributes() const = 0;

  // Latent displacement for the realized shift `delta` at `z`.
  virtual Vector displacement(const LatentVector& z, const EditDelta& delta) const = 0;
};

struct EpsilonSample {
  Vector epsilon;
  EditDelta delta;
};

// delta = clip(alpha + epsilon, [0,1]) - alpha, componentwise. When alpha +
// epsilon already lies in the unit box, delta == epsilon bitwise.
EditDelta clip_delta(const AttributeVector& alpha, const Vector& epsilon);

// Draws epsilon ~ Uniform[-1,1]^N (independent components) and clips it.
EpsilonSample sample_epsilon(const AttributeVector& alpha, SeededRng& rng);

// z' = z + displacement(z, delta). Throws DimensionError on shape mismatch.
LatentVector apply_edit(const LatentVector& z, const Steering& steering, const EditDelta& delta);

}  // namespace latent_steer
