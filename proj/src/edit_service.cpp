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

#include "latent_steer/edit_service.hpp"

#include <chrono>
#include <cstdio>
#include <random>

#include "latent_steer/config.hpp"
#include "latent_steer/evaluation.hpp"

namespace latent_steer {

EditService::EditService(ServiceConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.inversion_steps < 1) throw ConfigError("serve.inversion_steps", "must be at least 1");
  if (cfg_.inversion_restarts < 1) throw ConfigError("serve.inversion_restarts", "must be at least 1");
  std::random_device rd;
  id_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void EditService::load(const Checkpoint& ckpt) {
  auto m = std::make_shared<Model>();
  m->bundle = make_world(ckpt.config.world);
  if (!ckpt.attribute_names.empty()) {
    if (ckpt.attribute_names.size() != static_cast<size_t>(m->bundle.num_attributes())) {
      throw DimensionError("checkpoint names " + std::to_string(ckpt.attribute_names.size()) +
                           " attributes, world has " + std::to_string(m->bundle.num_attributes()));
    }
    m->bundle.attribute_names = ckpt.attribute_names;
  }
  m->steering = make_steering(ckpt, m->bundle);
  std::unique_lock lock(model_mutex_);
  model_ = std::move(m);
}

bool EditService::loaded() const {
  std::shared_lock lock(model_mutex_);
  return model_ != nullptr;
}

std::shared_ptr<const EditService::Model> EditService::model() const {
  std::shared_lock lock(model_mutex_);
  if (!model_) throw ServiceError(503, "no checkpoint loaded");
  return model_;
}

std::vector<std::string> EditService::attribute_names() const { return model()->bundle.attribute_names; }

Index EditService::latent_dim() const { return model()->bundle.latent_dim(); }

Index EditService::num_attributes() const { return model()->bundle.num_attributes(); }

Index EditService::attribute_index(const std::string& key) const {
  const auto m = model();
  const auto& names = m->bundle.attribute_names;
  for (size_t k = 0; k < names.size(); ++k) {
    if (names[k] == key) return static_cast<Index>(k);
  }
  if (!key.empty() && key.find_first_not_of("0123456789") == std::string::npos && key.size() < 10) {
    const long i = std::stol(key);
    if (i < m->bundle.num_attributes()) return i;
  }
  throw ServiceError(400, "unknown attribute '" + key + "'");
}

std::string EditService::new_id() {
  std::lock_guard lock(id_mutex_);
  std::mt19937_64 mix(id_salt_ + ++id_counter_);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%016llx%04llx", static_cast<unsigned long long>(mix()),
                static_cast<unsigned long long>(id_counter_ & 0xffff));
  return buf;
}

SessionState EditService::open(LatentVector z, std::optional<double> inversion_mse) {
  const auto m = model();
  auto s = std::make_shared<Session>();
  s->original = m->bundle.generator->forward(z);
  s->state.id = new_id();
  s->state.initial_z = z;
  s->state.z = std::move(z);
  s->state.baseline = m->bundle.regressor->forward(s->original);
  s->state.created_at =
      std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
  s->state.inversion_mse = inversion_mse;
  SessionState copy = s->state;
  std::unique_lock lock(sessions_mutex_);
  sessions_[copy.id] = std::move(s);
  return copy;
}

SessionState EditService::create_from_seed(std::uint64_t seed) {
  SeededRng rng(seed);
  return open(LatentVector(rng.normal_vector(latent_dim())), std::nullopt);
}

SessionState EditService::create_from_image(const Image& target) {
  const auto m = model();
  if (target.rows() != m->bundle.generator->height() || target.cols() != m->bundle.generator->width()) {
    throw ServiceError(422, "image is " + std::to_string(target.cols()) + "x" + std::to_string(target.rows()) +
                                ", the model renders " + std::to_string(m->bundle.generator->width()) + "x" +
                                std::to_string(m->bundle.generator->height()));
  }
  InversionConfig inv;
  inv.steps = cfg_.inversion_steps;
  inv.restarts = cfg_.inversion_restarts;
  inv.learning_rate = cfg_.inversion_learning_rate;
  const InversionResult result = invert(target, m->bundle, inv);
  return open(result.z, result.mse);
}

std::shared_ptr<EditService::Session> EditService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown session '" + id + "'");
  return it->second;
}

EditOutcome EditService::edit(const std::string& id, const EditRequest& request) {
  const auto m = model();
  const auto s = find(id);
  const Index n = m->bundle.num_attributes();
  for (const auto& [attr, value] : request.delta) {
    if (attr < 0 || attr >= n) throw ServiceError(400, "attribute index out of range");
    if (!std::isfinite(value)) throw ServiceError(400, "delta values must be finite");
  }

  std::unique_lock lock(s->mutex, std::defer_lock);
  if (cfg_.queue_concurrent_edits) {
    lock.lock();
  } else if (!lock.try_lock()) {
    throw ServiceError(409, "another edit on this session is in progress");
  }

  const Image current = m->bundle.generator->forward(s->state.z);
  const AttributeVector alpha = m->bundle.regressor->forward(current);
  Vector eps = Vector::Zero(n);
  for (const auto& [attr, value] : request.delta) {
    eps[attr] = request.mode == EditMode::kAbsoluteTarget ? value - alpha.values[attr] : value;
  }
  EditOutcome out;
  out.requested = eps;
  out.applied = clip_delta(alpha, eps);
  s->state.z = apply_edit(s->state.z, *m->steering, out.applied);
  s->state.history.push_back(out.applied);
  out.image = m->bundle.generator->forward(s->state.z);
  out.realized = m->bundle.regressor->forward(out.image);
  out.identity = identity_similarity(s->original, out.image, m->bundle);
  out.step = s->state.history.size();
  return out;
}

SessionState EditService::reset(const std::string& id) {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  s->state.z = s->state.initial_z;
  s->state.history.clear();
  return s->state;
}

SessionState EditService::session(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  return s->state;
}

Image EditService::render(const std::string& id) const { return render_latent(session(id).z); }

Image EditService::render_latent(const LatentVector& z) const { return model()->bundle.generator->forward(z); }

AttributeVector EditService::attributes_of(const Image& img) const { return model()->bundle.regressor->forward(img); }

LatentVector EditService::replay(const SessionState& state) const {
  const auto m = model();
  LatentVector z = state.initial_z;
  for (const auto& delta : state.history) z = apply_edit(z, *m->steering, delta);
  return z;
}

}  // namespace latent_steer
