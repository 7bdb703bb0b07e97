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

#include "latent_steer/inversion.hpp"

#include <cmath>
#include <limits>

#include "latent_steer/errors.hpp"
#include "latent_steer/evaluation.hpp"
#include "latent_steer/losses.hpp"

namespace latent_steer {

void InversionConfig::validate() const {
  if (steps < 1) throw ConfigError("inversion.steps", "must be at least 1");
  if (restarts < 1) throw ConfigError("inversion.restarts", "must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("inversion.learning_rate", "must be positive");
  if (!(content_weight >= 0.0)) throw ConfigError("inversion.content_weight", "must be non-negative");
}

double pixel_mse(const Image& a, const Image& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("pixel_mse: image shapes differ");
  return (a - b).square().mean();
}

namespace {

struct Objective {
  double mse;
  double value;
  Vector grad;
};

Objective evaluate(const LatentVector& z, const Image& target, const FeatureMaps& target_feats,
                   const ModelBundle& bundle, const InversionConfig& cfg) {
  const Image img = bundle.generator->forward(z);
  const Image diff = img - target;
  Objective o;
  o.mse = diff.square().mean();
  o.value = o.mse;
  Image g = diff * (2.0 / static_cast<double>(diff.size()));
  if (cfg.content_weight > 0.0) {
    const FeatureLoss c = content_loss(bundle.features->forward(img), target_feats);
    o.value += cfg.content_weight * c.value;
    g += cfg.content_weight * bundle.features->vjp(img, c.grad);
  }
  o.grad = bundle.generator->vjp(z, g);
  return o;
}

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

}  // namespace

InversionResult invert(const Image& target, const ModelBundle& bundle, const InversionConfig& cfg) {
  cfg.validate();
  bundle.validate();
  if (target.rows() != bundle.generator->height() || target.cols() != bundle.generator->width()) {
    throw DimensionError("invert: target is " + std::to_string(target.rows()) + "x" +
                         std::to_string(target.cols()) + ", generator renders " +
                         std::to_string(bundle.generator->height()) + "x" +
                         std::to_string(bundle.generator->width()));
  }
  const Index m = bundle.latent_dim();
  const FeatureMaps target_feats =
      cfg.content_weight > 0.0 ? bundle.features->forward(target) : FeatureMaps{};
  const SeededRng root(cfg.seed);

  InversionResult result;
  result.trace.assign(static_cast<size_t>(cfg.steps), std::numeric_limits<double>::infinity());
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < cfg.restarts; ++r) {
    LatentVector z = LatentVector::zeros(m);
    if (r > 0) {
      SeededRng rng = root.substream(static_cast<std::uint64_t>(r));
      z = LatentVector(rng.normal_vector(m));
    }
    std::vector<double> trace(static_cast<size_t>(cfg.steps));
    Vector mom = Vector::Zero(m);
    Vector vel = Vector::Zero(m);
    Objective o = evaluate(z, target, target_feats, bundle, cfg);
    double restart_best = std::numeric_limits<double>::infinity();
    LatentVector restart_z = z;
    bool failed = false;
    for (int t = 0; t < cfg.steps; ++t) {
      if (!std::isfinite(o.value) || !o.grad.allFinite()) {
        failed = true;
        break;
      }
      mom = kBeta1 * mom + (1.0 - kBeta1) * o.grad;
      vel = kBeta2 * vel + (1.0 - kBeta2) * o.grad.cwiseAbs2();
      const double bc1 = 1.0 - std::pow(kBeta1, t + 1);
      const double bc2 = 1.0 - std::pow(kBeta2, t + 1);
      z.values -= cfg.learning_rate * ((mom / bc1).array() / ((vel / bc2).array().sqrt() + kEps)).matrix();
      o = evaluate(z, target, target_feats, bundle, cfg);
      if (!std::isfinite(o.mse)) {
        failed = true;
        break;
      }
      if (o.mse < restart_best) {
        restart_best = o.mse;
        restart_z = z;
      }
      trace[static_cast<size_t>(t)] = restart_best;
    }
    if (failed) {
      ++result.failed_restarts;
      continue;
    }
    for (int t = 0; t < cfg.steps; ++t) {
      result.trace[static_cast<size_t>(t)] =
          std::min(result.trace[static_cast<size_t>(t)], trace[static_cast<size_t>(t)]);
    }
    if (restart_best < best) {
      best = restart_best;
      result.z = restart_z;
      result.best_restart = r;
    }
  }
  if (result.failed_restarts == cfg.restarts) {
    throw DivergenceError(0, "invert: every restart produced a non-finite loss");
  }
  result.mse = result.trace.back();
  return result;
}

InvertEditResult invert_then_edit(const Image& target, const ModelBundle& bundle, const Steering& steering,
                                  const Vector& requested, const InversionConfig& cfg) {
  if (requested.size() != bundle.num_attributes()) {
    throw DimensionError("invert_then_edit: delta has " + std::to_string(requested.size()) +
                         " components, model has " + std::to_string(bundle.num_attributes()));
  }
  InvertEditResult out;
  out.inversion = invert(target, bundle, cfg);
  out.reconstruction = bundle.generator->forward(out.inversion.z);
  const AttributeVector alpha = bundle.regressor->forward(out.reconstruction);
  out.report.applied = clip_delta(alpha, requested);
  out.edited = bundle.generator->forward(apply_edit(out.inversion.z, steering, out.report.applied));
  out.report.mse = out.inversion.mse;
  out.report.identity = identity_similarity(out.reconstruction, out.edited, bundle);
  out.report.realized_change = bundle.regressor->forward(out.edited).values - alpha.values;
  return out;
}

}  // namespace latent_steer
