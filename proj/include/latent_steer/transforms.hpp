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

#include <string>
#include <string_view>
#include <vector>

#include "latent_steer/latent_core.hpp"
#include "latent_steer/types.hpp"

namespace latent_steer {

enum class TransformKind { kGlobalLinear, kLocalLinear, kLocalMlp };

std::string_view to_string(TransformKind kind);
// Accepts "global-linear", "local-linear", "local-mlp". Throws ConfigError otherwise.
TransformKind parse_transform_kind(std::string_view name);

struct ParamEntry {
  std::string name;
  std::vector<Index> shape;
  std::string init;  // initializer id, recorded in checkpoints

  Index size() const;
};

class ParamManifest {
 public:
  ParamManifest() = default;
  explicit ParamManifest(std::vector<ParamEntry> entries) : entries_(std::move(entries)) {}

  const std::vector<ParamEntry>& entries() const { return entries_; }
  Index total_size() const;
  // Offset of entry `name` in the flat parameter array; throws if absent.
  Index offset(std::string_view name) const;

  bool operator==(const ParamManifest& other) const;

 private:
  std::vector<ParamEntry> entries_;
};

struct Normalization {
  bool enabled = false;
  double scale = 3.0;
};

struct TransformGradient {
  Vector params;
  Vector latent;  // d(z')/dz contracted with upstream; identity-plus-zero for global kinds
};

// The trainable set of N direction functions d_i(z) over an m-dimensional
// latent space. Parameters live in one flat array described by a manifest.
//
//   global-linear  d_i(z) = D[:, i]
//   local-linear   d_i(z) = W_i z + b_i
//   local-mlp      d_i(z) = W2 lrelu(W1 lrelu(W0 z + b0) + b1) + b2   (widths m->m->m)
//
// With normalization enabled each column becomes scale * d_i / |d_i|.
class TransformModule : public Steering {
 public:
  static constexpr double kDefaultLeakySlope = 0.2;

  // All parameters zero.
  TransformModule(TransformKind kind, Index latent_dim, Index num_attributes,
                  Normalization normalization = {}, double leaky_slope = kDefaultLeakySlope);

  TransformKind kind() const { return kind_; }
  Index latent_dim() const override { return m_; }
  Index num_attributes() const override { return n_; }
  const ParamManifest& manifest() const { return manifest_; }
  const Normalization& normalization() const { return normalization_; }
  double leaky_slope() const { return leaky_slope_; }

  const Vector& params() const { return params_; }
  Vector& params() { return params_; }
  void set_params(const Vector& params);

  // m x N matrix whose column i is d_i(z).
  Matrix directions(const LatentVector& z) const;

  Vector displacement(const LatentVector& z, const EditDelta& delta) const override;

  // Contracts d(z + sum_i delta_i d_i(z)) with `upstream`, giving gradients
  // with respect to all parameters and to z.
  TransformGradient vjp(const LatentVector& z, const EditDelta& delta, const Vector& upstream) const;

  // Smallest |pre-activation| of any leaky-ReLU unit at z; infinity for the
  // linear kinds. Finite differences are unreliable when this is tiny.
  double activation_margin(const LatentVector& z) const;

  // Rounds parameters to the 32-bit payload precision used by checkpoints.
  void snap_to_float32();

 private:
  Vector raw_direction(Index i, const Vector& z) const;
  void check_latent(const LatentVector& z) const;

  TransformKind kind_;
  Index m_;
  Index n_;
  Normalization normalization_;
  double leaky_slope_;
  ParamManifest manifest_;
  Vector params_;
};

ParamManifest make_manifest(TransformKind kind, Index latent_dim, Index num_attributes);

// Global-linear columns ~ Normal(0, 0.01 I); local weights ~ Uniform[-a, a]
// with a = sqrt(1 / fan_in); biases zero.
TransformModule init_transform(TransformKind kind, Index latent_dim, Index num_attributes,
                               SeededRng& rng, Normalization normalization = {});

}  // namespace latent_steer
