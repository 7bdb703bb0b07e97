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
#include <optional>
#include <string>
#include <vector>

#include "latent_steer/latent_core.hpp"
#include "latent_steer/losses.hpp"
#include "latent_steer/models.hpp"
#include "latent_steer/transforms.hpp"

namespace latent_steer {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Joint mode edits every attribute at once; single mode keeps only one
// attribute's delta and zeroes the rest.
struct SamplingMode {
  std::optional<Index> single_attribute;

  static SamplingMode joint() { return {}; }
  static SamplingMode single(Index attribute) { return {attribute}; }
  bool is_joint() const { return !single_attribute.has_value(); }
};

struct TrainConfig {
  long iterations = 2000;
  int batch_size = 4;
  AdamConfig adam;
  SamplingMode sampling;
  LossWeights weights{10.0, 0.05, 0.001};
  RegMode reg_mode = RegMode::kStandard;
  std::uint64_t seed = 0;
  long checkpoint_interval = 0;  // 0: final checkpoint only
  double grad_clip = 0.0;        // global-norm clip; 0 disables

  // Desk-scale defaults for the toy world.
  static TrainConfig toy_defaults() { return {}; }
  // 50k iterations, batch 4, Adam lr 1e-4, weights (10, 0.05, 0.05).
  static TrainConfig full_scale();

  // Throws ConfigError naming the first invalid field.
  void validate(Index num_attributes) const;
};

class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(Index size) : m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}
  AdamState(Vector m, Vector v, long step) : m_(std::move(m)), v_(std::move(v)), step_(step) {}

  void update(Vector& params, const Vector& grad, const AdamConfig& cfg);
  void snap_to_float32();

  const Vector& first_moment() const { return m_; }
  const Vector& second_moment() const { return v_; }
  long step() const { return step_; }

 private:
  Vector m_;
  Vector v_;
  long step_ = 0;
};

// One training element: z ~ N(0, I), alpha = R(G(z)), epsilon ~ U[-1,1]^N,
// delta = clip(alpha + epsilon) - alpha.
struct TrainSample {
  LatentVector z;
  AttributeVector alpha;
  Vector epsilon;
  EditDelta delta;
};

// Element b of iteration t draws from the substream (t, b) of cfg.seed, so a
// batch is identical however it is scheduled.
std::vector<TrainSample> draw_batch(const ModelBundle& bundle, const TrainConfig& cfg, long iteration);

TrainSample draw_sample(const ModelBundle& bundle, const TrainConfig& cfg, SeededRng& rng);

// Batch-mean losses of an arbitrary steering, without gradients.
LossBreakdown evaluate_batch(const Steering& steering, const ModelBundle& bundle,
                             const std::vector<TrainSample>& batch, const TrainConfig& cfg);

struct BatchGradient {
  LossBreakdown losses;
  Vector total;  // d(total)/d(params)
  // Unweighted per-term parameter gradients, filled when requested.
  std::optional<Vector> reg;
  std::optional<Vector> disc;
  std::optional<Vector> content;
};

BatchGradient loss_and_gradient(const TransformModule& transform, const ModelBundle& bundle,
                                const std::vector<TrainSample>& batch, const TrainConfig& cfg,
                                bool per_term = false);

struct TrainRecord {
  std::vector<LossBreakdown> losses;
  std::vector<double> wall_clock_seconds;  // cumulative, one per iteration
  std::vector<std::string> checkpoint_ids;
};

// Executes one iteration of the training procedure and applies one Adam
// update to `transform`. Throws DivergenceError on a non-finite loss.
LossBreakdown train_step(TransformModule& transform, AdamState& optimizer, const ModelBundle& bundle,
                         const TrainConfig& cfg, long iteration);

struct TrainHooks {
  std::function<void(long iteration, const LossBreakdown&)> on_step;
  // Called with float32-snapped state; returns an id recorded in TrainRecord.
  std::function<std::string(const TransformModule&, const AdamState&, long iteration)> on_checkpoint;
};

struct TrainResult {
  TransformModule transform;
  AdamState optimizer;
  TrainRecord record;
};

// Runs iterations [start_iteration, cfg.iterations). Checkpoints fire after
// every multiple of the interval and after the last iteration; each one rounds
// parameters and optimizer moments to float32 so a resumed run continues the
// identical trajectory.
TrainResult train(TransformModule transform, const ModelBundle& bundle, const TrainConfig& cfg,
                  const TrainHooks& hooks = {}, AdamState optimizer = {}, long start_iteration = 0);

struct TermAudit {
  std::string term;
  double max_relative_error = 0.0;
  int worst_point = -1;
};

struct GradientAuditReport {
  int n_points = 0;
  int redrawn_points = 0;
  double max_relative_error = 0.0;
  std::vector<TermAudit> terms;  // reg, disc, content, total
  std::string worst_term;
};

// Relative error between two gradient vectors: |a - b| / max(|a|, |b|, 1e-10).
double relative_error(const Vector& analytic, const Vector& numeric);

inline constexpr double kAuditStep = 1e-5;
inline constexpr double kAuditActivationMargin = 1e-3;

// End-to-end central-difference check of d(loss)/d(T params) at n_points
// single-element states drawn from cfg.seed. States are redrawn when
// `skip_state` returns true or a leaky-ReLU unit of T sits within
// kAuditActivationMargin of its kink.
GradientAuditReport gradient_audit(const ModelBundle& bundle, const TransformModule& transform,
                                   int n_points, const TrainConfig& cfg,
                                   const std::function<bool(const TrainSample&)>& skip_state = {},
                                   double step = kAuditStep);

std::string format_report(const GradientAuditReport& report);

}  // namespace latent_steer
