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

#include "latent_steer/models.hpp"

#include "latent_steer/errors.hpp"

namespace latent_steer {

void ModelBundle::validate() const {
  if (!generator || !regressor || !discriminator || !features || !identity) {
    throw DimensionError("model bundle is missing a collaborator");
  }
  if (!attribute_names.empty() &&
      static_cast<Index>(attribute_names.size()) != regressor->num_attributes()) {
    throw DimensionError("attribute name count does not match regressor output size");
  }
}

std::vector<double> ModelBundle::frozen_parameters() const {
  std::vector<double> out;
  auto append = [&out](const std::vector<double>& p) { out.insert(out.end(), p.begin(), p.end()); };
  append(generator->parameters());
  append(regressor->parameters());
  append(discriminator->parameters());
  append(features->parameters());
  append(identity->parameters());
  return out;
}

}  // namespace latent_steer
