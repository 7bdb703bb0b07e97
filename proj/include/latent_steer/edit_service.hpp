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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "latent_steer/checkpoint.hpp"
#include "latent_steer/errors.hpp"
#include "latent_steer/inversion.hpp"
#include "latent_steer/latent_core.hpp"
#include "latent_steer/models.hpp"

namespace latent_steer {

// Failure that maps onto an HTTP status.
class ServiceError : public Error {
 public:
  ServiceError(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct ServiceConfig {
  int inversion_steps = 500;
  int inversion_restarts = 3;
  double inversion_learning_rate = 0.05;
  // Concurrent edits on one session wait their turn; when false they get 409.
  bool queue_concurrent_edits = true;
  std::string cors_origin = "*";
};

enum class EditMode { kRelative, kAbsoluteTarget };

struct EditRequest {
  std::vector<std::pair<Index, double>> delta;  // attribute -> requested value
  EditMode mode = EditMode::kRelative;
};

struct SessionState {
  std::string id;
  LatentVector initial_z;
  LatentVector z;
  AttributeVector baseline;  // R(G(initial z))
  std::vector<EditDelta> history;
  double created_at = 0.0;   // seconds since the epoch
  std::optional<double> inversion_mse;
};

struct EditOutcome {
  Image image;
  AttributeVector realized;  // R of the new image
  Vector requested;          // epsilon after absolute-target conversion
  EditDelta applied;         // delta actually applied after clipping
  double identity = 1.0;     // cosine against the session's original image
  std::size_t step = 0;      // history length after this edit
};

// Interactive editing sessions over one read-only checkpoint. All methods are
// safe to call from concurrent request threads; edits within one session are
// strictly ordered.
class EditService {
 public:
  explicit EditService(ServiceConfig cfg = {});

  void load(const Checkpoint& ckpt);
  bool loaded() const;
  const ServiceConfig& config() const { return cfg_; }

  std::vector<std::string> attribute_names() const;
  Index latent_dim() const;
  Index num_attributes() const;
  // Resolves an attribute name or decimal index; ServiceError 400 otherwise.
  Index attribute_index(const std::string& key) const;

  SessionState create_from_seed(std::uint64_t seed);
  // Inverts `target` with the configured budget. ServiceError 422 on a shape mismatch.
  SessionState create_from_image(const Image& target);

  EditOutcome edit(const std::string& id, const EditRequest& request);
  SessionState reset(const std::string& id);
  SessionState session(const std::string& id) const;
  Image render(const std::string& id) const;
  Image render_latent(const LatentVector& z) const;
  AttributeVector attributes_of(const Image& img) const;

  // Re-applies the recorded deltas to the initial latent.
  LatentVector replay(const SessionState& state) const;

 private:
  struct Model {
    ModelBundle bundle;
    std::shared_ptr<const Steering> steering;
  };
  struct Session {
    std::mutex mutex;
    SessionState state;
    Image original;
  };

  std::shared_ptr<const Model> model() const;
  std::shared_ptr<Session> find(const std::string& id) const;
  SessionState open(LatentVector z, std::optional<double> inversion_mse);
  std::string new_id();

  ServiceConfig cfg_;
  mutable std::shared_mutex model_mutex_;
  std::shared_ptr<const Model> model_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex id_mutex_;
  std::uint64_t id_counter_ = 0;
  std::uint64_t id_salt_ = 0;
};

}  // namespace latent_steer
