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

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace latent_steer {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Point z in the generator's input space.
struct LatentVector {
  Vector values;

  LatentVector() = default;
  explicit LatentVector(Vector v) : values(std::move(v)) {}
  static LatentVector zeros(Index m) { return LatentVector(Vector::Zero(m)); }

  Index dim() const { return values.size(); }
  bool finite() const { return values.allFinite(); }
};

// Normalized attribute scores alpha in [0,1]^N.
struct AttributeVector {
  Vector values;

  AttributeVector() = default;
  explicit AttributeVector(Vector v) : values(std::move(v)) {}

  Index dim() const { return values.size(); }
  bool valid() const {
    return values.allFinite() && (values.array() >= 0.0).all() && (values.array() <= 1.0).all();
  }
};

// Realized per-attribute shift delta, after clipping against some alpha.
struct EditDelta {
  Vector values;

  EditDelta() = default;
  explicit EditDelta(Vector v) : values(std::move(v)) {}
  static EditDelta zeros(Index n) { return EditDelta(Vector::Zero(n)); }

  Index dim() const { return values.size(); }
};

// Deterministic random stream. Workers never share an instance; parallel
// consumers derive independent substreams keyed by integers instead.
class SeededRng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64/seed_seq";

  explicit SeededRng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  // Independent stream determined only by (seed, a, b).
  SeededRng substream(std::uint64_t a, std::uint64_t b = 0) const;

  double uniform(double lo, double hi);
  double normal();
  Vector uniform_vector(Index n, double lo, double hi);
  Vector normal_vector(Index n);

  std::mt19937_64& engine() { return engine_; }

 private:
  SeededRng(std::uint64_t seed, std::seed_seq& seq);

  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace latent_steer
