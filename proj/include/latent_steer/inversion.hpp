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
#include <vector>

#include "latent_steer/latent_core.hpp"
#include "latent_steer/models.hpp"

namespace latent_steer {

struct InversionConfig {
  int steps = 500;
  double learning_rate = 0.05;
  int restarts = 3;
  double content_weight = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct InversionResult {
  LatentVector z;
  double mse = 0.0;            // mean over pixels
  std::vector<double> trace;   // best-so-far MSE over all restarts, one entry per step
  int best_restart = 0;
  int failed_restarts = 0;
};

// Adam descent on mean pixel squared error (plus optional content loss) from
// z = 0 and restarts - 1 draws from N(0, I). Restarts that hit a non-finite
// loss are discarded; DivergenceError only when every restart fails.
InversionResult invert(const Image& target, const ModelBundle& bundle, const InversionConfig& cfg);

double pixel_mse(const Image& a, const Image& b);

struct EditReport {
  double mse = 0.0;
  double identity = 1.0;  // cosine between reconstruction and edited image
  EditDelta applied;
  Vector realized_change;  // R(edited) - R(reconstruction)
};

struct InvertEditResult {
  InversionResult inversion;
  Image reconstruction;
  Image edited;
  EditReport report;
};

// Inverts `target`, clips `requested` against the reconstruction's attributes
// and applies it with `steering`.
InvertEditResult invert_then_edit(const Image& target, const ModelBundle& bundle, const Steering& steering,
                                  const Vector& requested, const InversionConfig& cfg);

}  // namespace latent_steer
