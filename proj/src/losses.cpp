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

#include "latent_steer/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "latent_steer/errors.hpp"

namespace latent_steer {

namespace {

double clamp_prob(double p) { return std::clamp(p, kLogClamp, 1.0 - kLogClamp); }

}  // namespace

std::string_view to_string(RegMode mode) {
  return mode == RegMode::kStandard ? "standard" : "swapped";
}

RegMode parse_reg_mode(std::string_view name) {
  if (name == "standard") return RegMode::kStandard;
  if (name == "swapped") return RegMode::kSwapped;
  throw ConfigError("train.reg_mode", "unknown regression loss mode '" + std::string(name) + "'");
}

VectorLoss reg_loss(const Vector& predicted, const Vector& target, RegMode mode) {
  if (predicted.size() != target.size() || predicted.size() == 0) {
    throw DimensionError("reg_loss: prediction has " + std::to_string(predicted.size()) +
                         " components, target has " + std::to_string(target.size()));
  }
  const double inv_n = 1.0 / static_cast<double>(predicted.size());
  VectorLoss out{0.0, Vector(predicted.size())};
  for (Index i = 0; i < predicted.size(); ++i) {
    const double p = clamp_prob(predicted[i]);
    if (mode == RegMode::kStandard) {
      const double t = target[i];
      out.value += -t * std::log(p) - (1.0 - t) * std::log(1.0 - p);
      out.grad[i] = inv_n * (-t / p + (1.0 - t) / (1.0 - p));
    } else {
      const double t = clamp_prob(target[i]);
      const double q = predicted[i];
      out.value += -q * std::log(t) - (1.0 - q) * std::log(1.0 - t);
      out.grad[i] = inv_n * (-std::log(t) + std::log(1.0 - t));
    }
  }
  out.value *= inv_n;
  return out;
}

ScalarLoss disc_loss(double score) {
  const double d = clamp_prob(score);
  return {std::log(1.0 - d), -1.0 / (1.0 - d)};
}

FeatureLoss content_loss(const FeatureMaps& edited, const FeatureMaps& original) {
  if (edited.size() != original.size()) {
    throw DimensionError("content_loss: layer counts differ");
  }
  FeatureLoss out{0.0, {}};
  out.grad.reserve(edited.size());
  for (size_t l = 0; l < edited.size(); ++l) {
    if (edited[l].rows() != original[l].rows() || edited[l].cols() != original[l].cols()) {
      throw DimensionError("content_loss: layer " + std::to_string(l) + " shapes differ");
    }
    const Image diff = edited[l] - original[l];
    out.value += diff.square().sum();
    out.grad.push_back(2.0 * diff);
  }
  return out;
}

LossBreakdown total_loss(double reg, double disc, double content, const LossWeights& weights) {
  return {reg, disc, content, weights.reg * reg + weights.disc * disc + weights.content * content};
}

Vector combine_gradients(const LossWeights& weights, const Vector& reg_grad, const Vector& disc_grad,
                         const Vector& content_grad) {
  if (reg_grad.size() != disc_grad.size() || reg_grad.size() != content_grad.size()) {
    throw DimensionError("combine_gradients: gradient sizes differ");
  }
  return weights.reg * reg_grad + weights.disc * disc_grad + weights.content * content_grad;
}

}  // namespace latent_steer
