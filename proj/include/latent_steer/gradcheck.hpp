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
#include <functional>
#include <string>
#include <vector>

#include "latent_steer/models.hpp"
#include "latent_steer/trainer.hpp"
#include "latent_steer/transforms.hpp"

namespace latent_steer {

inline constexpr double kGradcheckStep = 1e-4;
inline constexpr double kGradcheckTolerance = 1e-4;

struct ComponentAudit {
  std::string name;
  int n_points = 0;
  int redrawn_points = 0;
  double max_relative_error = 0.0;
  int worst_point = -1;
};

// Checks each collaborator's VJP against central differences of <u, f(x)>
// for random upstream u, at n_points inputs rendered from z ~ N(0, I) (plus
// pixel noise for the discriminator so its penalties are active). Inputs for
// which `near_kink` is true are redrawn.
std::vector<ComponentAudit> audit_models(const ModelBundle& bundle, int n_points, std::uint64_t seed,
                                         const std::function<bool(const Image&)>& near_kink = {});

// Checks reg (both modes), disc and content loss gradients at n_points
// random inputs away from the log clamps.
std::vector<ComponentAudit> audit_losses(int n_points, std::uint64_t seed);

std::string format_audit(const std::vector<ComponentAudit>& audits);

struct EndToEndAudit {
  TransformKind kind = TransformKind::kGlobalLinear;
  bool normalized = false;
  GradientAuditReport report;
};

struct FullAudit {
  std::vector<ComponentAudit> models;
  std::vector<ComponentAudit> losses;
  std::vector<EndToEndAudit> end_to_end;  // every transform kind, with and without normalization
  double seconds = 0.0;

  double max_relative_error() const;
};

// Module, loss and end-to-end audits at n_points each. With `toy_kinks`,
// states whose source or edited render is near a toy-world kink are redrawn.
FullAudit full_audit(const ModelBundle& bundle, int n_points, std::uint64_t seed, bool toy_kinks = true);
std::string format_full_audit(const FullAudit& audit);

}  // namespace latent_steer
