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

#include "latent_steer/latent_core.hpp"

#include <algorithm>
#include <string>

#include "latent_steer/errors.hpp"

namespace latent_steer {

EditDelta clip_delta(const AttributeVector& alpha, const Vector& epsilon) {
  if (alpha.dim() != epsilon.size()) {
    throw DimensionError("clip_delta: alpha has " + std::to_string(alpha.dim()) +
                         " components, epsilon has " + std::to_string(epsilon.size()));
  }
  Vector delta(epsilon.size());
  for (Index i = 0; i < epsilon.size(); ++i) {
    const double a = alpha.values[i];
    const double target = a + epsilon[i];
    if (target >= 0.0 && target <= 1.0) {
      delta[i] = epsilon[i];
    } else {
      delta[i] = std::clamp(target, 0.0, 1.0) - a;
    }
  }
  return EditDelta(std::move(delta));
}

EpsilonSample sample_epsilon(const AttributeVector& alpha, SeededRng& rng) {
  Vector eps = rng.uniform_vector(alpha.dim(), -1.0, 1.0);
  EditDelta delta = clip_delta(alpha, eps);
  return {std::move(eps), std::move(delta)};
}

LatentVector apply_edit(const LatentVector& z, const Steering& steering, const EditDelta& delta) {
  if (z.dim() != steering.latent_dim() || delta.dim() != steering.num_attributes()) {
    throw DimensionError("apply_edit: expected z of size " + std::to_string(steering.latent_dim()) +
                         " and delta of size " + std::to_string(steering.num_attributes()) +
                         ", got " + std::to_string(z.dim()) + " and " +
                         std::to_string(delta.dim()));
  }
  return LatentVector(z.values + steering.displacement(z, delta));
}

}  // namespace latent_steer
