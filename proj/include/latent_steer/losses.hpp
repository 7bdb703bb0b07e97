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

#include <string_view>

#include "latent_steer/models.hpp"
#include "latent_steer/types.hpp"

namespace latent_steer {

// Bounds applied to every logarithm argument in the losses.
inline constexpr double kLogClamp = 1e-6;

enum class RegMode {
  kStandard,      // -a' log a_hat - (1 - a') log(1 - a_hat)
  kSwapped,  // -a_hat log a' - (1 - a_hat) log(1 - a')
};

std::string_view to_string(RegMode mode);
RegMode parse_reg_mode(std::string_view name);

struct LossWeights {
  double reg = 10.0;
  double disc = 0.05;
  double content = 0.05;
};

struct LossBreakdown {
  double reg = 0.0;
  double disc = 0.0;
  double content = 0.0;
  double total = 0.0;
};

struct VectorLoss {
  double value;
  Vector grad;
};

struct ScalarLoss {
  double value;
  double grad;
};

struct FeatureLoss {
  double value;
  FeatureMaps grad;
};

// Binary cross entropy averaged over attributes; gradient flows only through
// the prediction. Throws DimensionError on length mismatch.
VectorLoss reg_loss(const Vector& predicted, const Vector& target, RegMode mode = RegMode::kStandard);

// log(1 - D); minimizing drives D upward.
ScalarLoss disc_loss(double score);

// Sum over layers of the squared L2 distance between matching feature maps.
FeatureLoss content_loss(const FeatureMaps& edited, const FeatureMaps& original);

LossBreakdown total_loss(double reg, double disc, double content, const LossWeights& weights);

// Weighted sum of per-term gradients that live in a common space.
Vector combine_gradients(const LossWeights& weights, const Vector& reg_grad, const Vector& disc_grad,
                         const Vector& content_grad);

}  // namespace latent_steer
