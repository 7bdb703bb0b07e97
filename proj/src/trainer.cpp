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

#include "latent_steer/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "latent_steer/errors.hpp"

namespace latent_steer {

TrainConfig TrainConfig::full_scale() {
  TrainConfig cfg;
  cfg.iterations = 50000;
  cfg.batch_size = 4;
  cfg.adam.learning_rate = 1e-4;
  cfg.weights = LossWeights{10.0, 0.05, 0.05};
  return cfg;
}

void TrainConfig::validate(Index num_attributes) const {
  if (iterations < 0) throw ConfigError("train.iterations", "must be non-negative");
  if (batch_size < 1) throw ConfigError("train.batch_size", "must be positive");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("train.learning_rate", "must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("train.beta1", "must be in [0,1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("train.beta2", "must be in [0,1)");
  if (!(adam.eps > 0.0)) throw ConfigError("train.eps", "must be positive");
  if (!(weights.reg >= 0.0)) throw ConfigError("weights.reg", "must be non-negative");
  if (!(weights.disc >= 0.0)) throw ConfigError("weights.disc", "must be non-negative");
  if (!(weights.content >= 0.0)) throw ConfigError("weights.content", "must be non-negative");
  if (checkpoint_interval < 0) throw ConfigError("train.checkpoint_interval", "must be non-negative");
  if (!(grad_clip >= 0.0)) throw ConfigError("train.grad_clip", "must be non-negative");
  if (sampling.single_attribute &&
      (*sampling.single_attribute < 0 || *sampling.single_attribute >= num_attributes)) {
    throw ConfigError("train.sampling", "single-mode attribute index out of range");
  }
}

void AdamState::update(Vector& params, const Vector& grad, const AdamConfig& cfg) {
  if (m_.size() != params.size()) {
    m_ = Vector::Zero(params.size());
    v_ = Vector::Zero(params.size());
    step_ = 0;
  }
  ++step_;
  m_ = cfg.beta1 * m_ + (1.0 - cfg.beta1) * grad;
  v_ = cfg.beta2 * v_ + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
  for (Index k = 0; k < params.size(); ++k) {
    const double mhat = m_[k] / bc1;
    const double vhat = v_[k] / bc2;
    params[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void AdamState::snap_to_float32() {
  for (Index k = 0; k < m_.size(); ++k) {
    m_[k] = static_cast<double>(static_cast<float>(m_[k]));
    v_[k] = static_cast<double>(static_cast<float>(v_[k]));
  }
}

TrainSample draw_sample(const ModelBundle& bundle, const TrainConfig& cfg, SeededRng& rng) {
  TrainSample s;
  s.z = LatentVector(rng.normal_vector(bundle.latent_dim()));
  s.alpha = bundle.regressor->forward(bundle.generator->forward(s.z));
  auto eps = sample_epsilon(s.alpha, rng);
  s.epsilon = std::move(eps.epsilon);
  s.delta = std::move(eps.delta);
  if (cfg.sampling.single_attribute) {
    const Index keep = *cfg.sampling.single_attribute;
    for (Index i = 0; i < s.delta.dim(); ++i) {
      if (i != keep) s.delta.values[i] = 0.0;
    }
  }
  return s;
}

std::vector<TrainSample> draw_batch(const ModelBundle& bundle, const TrainConfig& cfg, long iteration) {
  const SeededRng root(cfg.seed);
  std::vector<TrainSample> batch;
  batch.reserve(static_cast<size_t>(cfg.batch_size));
  for (int b = 0; b < cfg.batch_size; ++b) {
    SeededRng rng = root.substream(static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(b));
    batch.push_back(draw_sample(bundle, cfg, rng));
  }
  return batch;
}

namespace {

struct ElementForward {
  LatentVector z_edit;
  Image edited;
  Vector target;
  VectorLoss reg;
  ScalarLoss disc;
  FeatureLoss content;
  double score = 0.0;
};

ElementForward forward_element(const Steering& steering, const ModelBundle& bundle,
                               const TrainSample& s, const TrainConfig& cfg) {
  ElementForward f;
  f.z_edit = apply_edit(s.z, steering, s.delta);
  f.edited = bundle.generator->forward(f.z_edit);
  const Image original = bundle.generator->forward(s.z);
  f.target = s.alpha.values + s.delta.values;
  const AttributeVector predicted = bundle.regressor->forward(f.edited);
  f.reg = reg_loss(predicted.values, f.target, cfg.reg_mode);
  f.score = bundle.discriminator->forward(f.edited);
  f.disc = disc_loss(f.score);
  f.content = content_loss(bundle.features->forward(f.edited), bundle.features->forward(original));
  return f;
}

LossBreakdown finish(LossBreakdown sum, int n, const LossWeights& w) {
  const double inv = 1.0 / static_cast<double>(n);
  return total_loss(sum.reg * inv, sum.disc * inv, sum.content * inv, w);
}

}  // namespace

LossBreakdown evaluate_batch(const Steering& steering, const ModelBundle& bundle,
                             const std::vector<TrainSample>& batch, const TrainConfig& cfg) {
  LossBreakdown sum;
  for (const auto& s : batch) {
    const ElementForward f = forward_element(steering, bundle, s, cfg);
    sum.reg += f.reg.value;
    sum.disc += f.disc.value;
    sum.content += f.content.value;
  }
  return finish(sum, static_cast<int>(batch.size()), cfg.weights);
}

BatchGradient loss_and_gradient(const TransformModule& transform, const ModelBundle& bundle,
                                const std::vector<TrainSample>& batch, const TrainConfig& cfg,
                                bool per_term) {
  const Index p = transform.params().size();
  const double inv = 1.0 / static_cast<double>(batch.size());
  const LossWeights& w = cfg.weights;
  BatchGradient out;
  out.total = Vector::Zero(p);
  if (per_term) {
    out.reg = Vector::Zero(p);
    out.disc = Vector::Zero(p);
    out.content = Vector::Zero(p);
  }
  LossBreakdown sum;
  for (const auto& s : batch) {
    const ElementForward f = forward_element(transform, bundle, s, cfg);
    sum.reg += f.reg.value;
    sum.disc += f.disc.value;
    sum.content += f.content.value;

    const Image g_reg = bundle.regressor->vjp(f.edited, f.reg.grad);
    const Image g_disc = bundle.discriminator->vjp(f.edited, f.disc.grad);
    const Image g_content = bundle.features->vjp(f.edited, f.content.grad);

    auto to_params = [&](const Image& g_img) {
      const Vector g_z = bundle.generator->vjp(f.z_edit, g_img);
      return transform.vjp(s.z, s.delta, g_z).params;
    };
    const Image g_total = w.reg * g_reg + w.disc * g_disc + w.content * g_content;
    out.total += inv * to_params(g_total);
    if (per_term) {
      *out.reg += inv * to_params(g_reg);
      *out.disc += inv * to_params(g_disc);
      *out.content += inv * to_params(g_content);
    }
  }
  out.losses = finish(sum, static_cast<int>(batch.size()), w);
  return out;
}

LossBreakdown train_step(TransformModule& transform, AdamState& optimizer, const ModelBundle& bundle,
                         const TrainConfig& cfg, long iteration) {
  const auto batch = draw_batch(bundle, cfg, iteration);
  BatchGradient g = loss_and_gradient(transform, bundle, batch, cfg);
  const LossBreakdown& l = g.losses;
  if (!std::isfinite(l.total) || !std::isfinite(l.reg) || !std::isfinite(l.disc) ||
      !std::isfinite(l.content) || !g.total.allFinite()) {
    throw DivergenceError(iteration, "non-finite loss at iteration " + std::to_string(iteration));
  }
  if (cfg.grad_clip > 0.0) {
    const double norm = g.total.norm();
    if (norm > cfg.grad_clip) g.total *= cfg.grad_clip / norm;
  }
  optimizer.update(transform.params(), g.total, cfg.adam);
  return l;
}

TrainResult train(TransformModule transform, const ModelBundle& bundle, const TrainConfig& cfg,
                  const TrainHooks& hooks, AdamState optimizer, long start_iteration) {
  bundle.validate();
  cfg.validate(bundle.num_attributes());
  if (transform.latent_dim() != bundle.latent_dim() ||
      transform.num_attributes() != bundle.num_attributes()) {
    throw DimensionError("transform dimensions do not match the model bundle");
  }
  TrainResult result{std::move(transform), std::move(optimizer), {}};
  const auto t0 = std::chrono::steady_clock::now();
  for (long it = start_iteration; it < cfg.iterations; ++it) {
    const LossBreakdown l = train_step(result.transform, result.optimizer, bundle, cfg, it);
    result.record.losses.push_back(l);
    result.record.wall_clock_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (hooks.on_step) hooks.on_step(it, l);

    const long done = it + 1;
    const bool periodic = cfg.checkpoint_interval > 0 && done % cfg.checkpoint_interval == 0;
    if (periodic || done == cfg.iterations) {
      result.transform.snap_to_float32();
      result.optimizer.snap_to_float32();
      if (hooks.on_checkpoint) {
        result.record.checkpoint_ids.push_back(
            hooks.on_checkpoint(result.transform, result.optimizer, done));
      }
    }
  }
  return result;
}

double relative_error(const Vector& analytic, const Vector& numeric) {
  const double denom = std::max({analytic.norm(), numeric.norm(), 1e-10});
  return (analytic - numeric).norm() / denom;
}

GradientAuditReport gradient_audit(const ModelBundle& bundle, const TransformModule& transform,
                                   int n_points, const TrainConfig& cfg,
                                   const std::function<bool(const TrainSample&)>& skip_state,
                                   double step) {
  if (n_points < 1) throw PreconditionError("gradient_audit needs at least one point");
  if (!(step > 0.0)) throw PreconditionError("gradient_audit: step must be positive");
  const double kStep = step;
  GradientAuditReport report;
  report.n_points = n_points;
  report.terms = {{"reg"}, {"disc"}, {"content"}, {"total"}};

  const SeededRng root(cfg.seed ^ 0xa0d17ull);
  TrainConfig one = cfg;
  one.batch_size = 1;
  std::uint64_t draw = 0;
  for (int point = 0; point < n_points; ++point) {
    std::vector<TrainSample> batch;
    for (;;) {
      SeededRng rng = root.substream(draw++);
      TrainSample s = draw_sample(bundle, one, rng);
      if ((skip_state && skip_state(s)) || transform.activation_margin(s.z) < kAuditActivationMargin) {
        ++report.redrawn_points;
        continue;
      }
      batch.push_back(std::move(s));
      break;
    }

    const BatchGradient analytic = loss_and_gradient(transform, bundle, batch, one, true);
    const Index p = transform.params().size();
    Vector num_reg(p), num_disc(p), num_content(p), num_total(p);
    TransformModule probe = transform;
    for (Index k = 0; k < p; ++k) {
      const double saved = probe.params()[k];
      probe.params()[k] = saved + kStep;
      const LossBreakdown up = evaluate_batch(probe, bundle, batch, one);
      probe.params()[k] = saved - kStep;
      const LossBreakdown down = evaluate_batch(probe, bundle, batch, one);
      probe.params()[k] = saved;
      num_reg[k] = (up.reg - down.reg) / (2.0 * kStep);
      num_disc[k] = (up.disc - down.disc) / (2.0 * kStep);
      num_content[k] = (up.content - down.content) / (2.0 * kStep);
      num_total[k] = (up.total - down.total) / (2.0 * kStep);
    }
    const double errs[4] = {relative_error(*analytic.reg, num_reg),
                            relative_error(*analytic.disc, num_disc),
                            relative_error(*analytic.content, num_content),
                            relative_error(analytic.total, num_total)};
    for (int t = 0; t < 4; ++t) {
      if (errs[t] > report.terms[t].max_relative_error || report.terms[t].worst_point < 0) {
        report.terms[t].max_relative_error = errs[t];
        report.terms[t].worst_point = point;
      }
    }
  }
  report.worst_term = report.terms[0].term;
  for (const auto& t : report.terms) {
    if (t.max_relative_error >= report.max_relative_error) {
      report.max_relative_error = t.max_relative_error;
      report.worst_term = t.term;
    }
  }
  return report;
}

std::string format_report(const GradientAuditReport& report) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific;
  os << "gradient audit: " << report.n_points << " points (" << report.redrawn_points
     << " redrawn near kinks)\n";
  for (const auto& t : report.terms) {
    os << "  " << t.term << ": max relative error " << t.max_relative_error << " at point "
       << t.worst_point << "\n";
  }
  os << "  worst term: " << report.worst_term << " (" << report.max_relative_error << ")\n";
  return os.str();
}

}  // namespace latent_steer
