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
#include <memory>

#include "latent_steer/latent_core.hpp"
#include "latent_steer/models.hpp"

namespace latent_steer::toy {

inline constexpr Index kLatentDim = 8;
inline constexpr Index kNumAttributes = 3;
inline constexpr Index kTextureDim = 5;
inline constexpr Index kImageSize = 32;
inline constexpr Index kIdentityDim = 32;

// Attribute 0 is the background level sigma(z_0), attribute 1 the disk size
// through r = 4 + 8 sigma(z_1), attribute 2 the disk intensity sigma(z_2).
// Coordinates z_3..z_7 drive a fixed smooth texture (the image "identity").
struct ToyConfig {
  double center = 16.0;
  double radius_base = 4.0;
  double radius_span = 8.0;
  double edge_softness = 1.0;
  double texture_amplitude = 0.1;
  double texture_rms = 0.2;
  std::uint64_t texture_seed = 1234;
  std::uint64_t identity_seed = 99;
  double coverage_guard = 1e-3;
  // Contrast below which the size estimate relaxes to the uninformative 0.5.
  double contrast_floor = 0.01;
};

// Disk-on-background renderer:
//   M(p) = sigmoid((r(z) - |p - c|) / tau)
//   img  = b(1 - M) + c M + a_tex tanh(P_tex z_{3..7})
class ToyGenerator final : public Generator {
 public:
  explicit ToyGenerator(const ToyConfig& cfg);

  Index latent_dim() const override { return kLatentDim; }
  Index height() const override { return kImageSize; }
  Index width() const override { return kImageSize; }
  Image forward(const LatentVector& z) const override;
  Vector vjp(const LatentVector& z, const Image& upstream) const override;
  std::vector<double> parameters() const override;

  // (H*W) x 5 texture projection.
  const Matrix& texture_projection() const { return texture_; }

 private:
  ToyConfig cfg_;
  Image distance_;
  Matrix texture_;
};

// Measures background from the four 4x4 corners, disk intensity from the 3x3
// centre block and size from the disk's pixel coverage.
class ToyRegressor final : public Regressor {
 public:
  explicit ToyRegressor(const ToyConfig& cfg) : cfg_(cfg) {}

  Index num_attributes() const override { return kNumAttributes; }
  AttributeVector forward(const Image& img) const override;
  Image vjp(const Image& img, const Vector& upstream) const override;

 private:
  ToyConfig cfg_;
};

// D = sigmoid(10 (0.05 - off)); off penalizes out-of-range pixels and high
// frequency energy above twice the texture amplitude outside the edge band.
class ToyDiscriminator final : public Discriminator {
 public:
  explicit ToyDiscriminator(const ToyConfig& cfg);

  double forward(const Image& img) const override;
  Image vjp(const Image& img, double upstream) const override;

  double offness(const Image& img) const;
  // Mean |Laplacian| over interior pixels outside the disk edge band.
  double high_frequency(const Image& img) const;
  // 5-point Laplacian on that region, zero elsewhere.
  Image laplacian(const Image& img) const;

 private:
  ToyConfig cfg_;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> hf_mask_;
  Index hf_count_ = 0;
};

// Average-pool pyramid at factors 1, 2, 4, 8.
class PyramidFeatures final : public FeatureExtractor {
 public:
  FeatureMaps forward(const Image& img) const override;
  Image vjp(const Image& img, const FeatureMaps& upstream) const override;

  static constexpr int kFactors[4] = {1, 2, 4, 8};
};

// 8x8 downsample -> fixed projection -> L2 normalize.
class ToyIdentityEmbedder final : public IdentityEmbedder {
 public:
  explicit ToyIdentityEmbedder(const ToyConfig& cfg);

  Vector forward(const Image& img) const override;
  Image vjp(const Image& img, const Vector& upstream) const override;
  std::vector<double> parameters() const override;

  const Matrix& projection() const { return projection_; }

 private:
  Vector downsample(const Image& img) const;
  Matrix projection_;  // 32 x 64
};

// True when `img` lies within `tol` of a point where the regressor or the
// discriminator is not differentiable (pixel range limits, clamps, the
// contrast sign switch, the high-frequency hinge or a zero Laplacian).
bool near_kink(const Image& img, const ToyConfig& cfg = {}, double tol = 1e-3);

std::shared_ptr<const ToyGenerator> make_generator(const ToyConfig& cfg = {});
ModelBundle make_bundle(const ToyConfig& cfg = {});

// Ground-truth attributes (sigmoid(z_0), sigmoid(z_1), sigmoid(z_2)).
AttributeVector oracle_attributes(const LatentVector& z);

// Displacement that moves attribute i by exactly delta_i:
//   (logit(alpha_i + delta_i) - z_i) e_i,  alpha_i = sigmoid(z_i).
// Throws PreconditionError when alpha_i + delta_i is outside (0,1).
Vector oracle_direction(const LatentVector& z, Index attribute, double delta_i);

// Closed-form steering composed of oracle directions for every attribute.
// Targets are clamped to [1e-6, 1-1e-6] so any regressor-derived delta is accepted.
class OracleSteering final : public Steering {
 public:
  Index latent_dim() const override { return kLatentDim; }
  Index num_attributes() const override { return kNumAttributes; }
  Vector displacement(const LatentVector& z, const EditDelta& delta) const override;
};

}  // namespace latent_steer::toy
