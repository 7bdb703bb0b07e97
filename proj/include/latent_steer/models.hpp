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

#include <memory>
#include <string>
#include <vector>

#include "latent_steer/types.hpp"

namespace latent_steer {

// Grayscale image, row-major, nominal range [0,1].
using Image = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using FeatureMaps = std::vector<Image>;

// The five frozen collaborators of the framework. Each forward is
// deterministic and paired with a vector-Jacobian product. `parameters()`
// exposes internal weights so callers can assert they are never modified.

class Generator {
 public:
  virtual ~Generator() = default;
  virtual Index latent_dim() const = 0;
  virtual Index height() const = 0;
  virtual Index width() const = 0;
  virtual Image forward(const LatentVector& z) const = 0;
  virtual Vector vjp(const LatentVector& z, const Image& upstream) const = 0;
  virtual std::vector<double> parameters() const { return {}; }
};

class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual Index num_attributes() const = 0;
  virtual AttributeVector forward(const Image& img) const = 0;
  virtual Image vjp(const Image& img, const Vector& upstream) const = 0;
  virtual std::vector<double> parameters() const { return {}; }
};

class Discriminator {
 public:
  virtual ~Discriminator() = default;
  // Realness score in (0,1).
  virtual double forward(const Image& img) const = 0;
  virtual Image vjp(const Image& img, double upstream) const = 0;
  virtual std::vector<double> parameters() const { return {}; }
};

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual FeatureMaps forward(const Image& img) const = 0;
  virtual Image vjp(const Image& img, const FeatureMaps& upstream) const = 0;
  virtual std::vector<double> parameters() const { return {}; }
};

class IdentityEmbedder {
 public:
  virtual ~IdentityEmbedder() = default;
  // Unit-norm embedding.
  virtual Vector forward(const Image& img) const = 0;
  virtual Image vjp(const Image& img, const Vector& upstream) const = 0;
  virtual std::vector<double> parameters() const { return {}; }
};

struct ModelBundle {
  std::shared_ptr<const Generator> generator;
  std::shared_ptr<const Regressor> regressor;
  std::shared_ptr<const Discriminator> discriminator;
  std::shared_ptr<const FeatureExtractor> features;
  std::shared_ptr<const IdentityEmbedder> identity;
  std::vector<std::string> attribute_names;

  Index latent_dim() const { return generator->latent_dim(); }
  Index num_attributes() const { return regressor->num_attributes(); }

  // Throws DimensionError when collaborators are missing or disagree.
  void validate() const;

  // Concatenation of every collaborator's parameters, for freeze checks.
  std::vector<double> frozen_parameters() const;
};

}  // namespace latent_steer
