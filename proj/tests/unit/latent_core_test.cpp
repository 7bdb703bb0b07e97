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

#include "latent_steer/latent_core.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cstdint>

#include "latent_steer/errors.hpp"

namespace latent_steer {
namespace {

// Fixed displacement per attribute, independent of z.
class ColumnSteering final : public Steering {
 public:
  explicit ColumnSteering(Matrix d) : d_(std::move(d)) {}
  Index latent_dim() const override { return d_.rows(); }
  Index num_attributes() const override { return d_.cols(); }
  Vector displacement(const LatentVector&, const EditDelta& delta) const override { return d_ * delta.values; }

 private:
  Matrix d_;
};

AttributeVector attrs(std::initializer_list<double> v) {
  Vector x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double a : v) x[i++] = a;
  return AttributeVector(x);
}

Vector vec(std::initializer_list<double> v) { return attrs(v).values; }

TEST(ClipDelta, ClipsAtUpperAndLowerBounds) {
  const EditDelta d = clip_delta(attrs({0.8, 0.2}), vec({0.5, -0.5}));
  EXPECT_DOUBLE_EQ(d.values[0], 1.0 - 0.8);
  EXPECT_DOUBLE_EQ(d.values[1], 0.0 - 0.2);
}

TEST(ClipDelta, UnclippedComponentsPassThroughBitwise) {
  const Vector eps = vec({0.1, -0.3, 0.0});
  const EditDelta d = clip_delta(attrs({0.5, 0.5, 0.5}), eps);
  for (Index i = 0; i < 3; ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(d.values[i]), std::bit_cast<std::uint64_t>(eps[i]));
  }
}

TEST(ClipDelta, TargetsExactlyOnTheBoundaryAreNotClipped) {
  const EditDelta d = clip_delta(attrs({0.25, 0.75}), vec({0.75, -0.75}));
  EXPECT_EQ(d.values[0], 0.75);
  EXPECT_EQ(d.values[1], -0.75);
}

TEST(ClipDelta, ShapeMismatchThrows) {
  EXPECT_THROW(clip_delta(attrs({0.5, 0.5}), vec({0.1})), DimensionError);
}

TEST(SampleEpsilon, InvariantsHoldOverManyDraws) {
  SeededRng rng(11);
  long clipped = 0;
  for (int k = 0; k < 100000; ++k) {
    const AttributeVector alpha(rng.uniform_vector(3, 0.0, 1.0));
    const EpsilonSample s = sample_epsilon(alpha, rng);
    for (Index i = 0; i < 3; ++i) {
      ASSERT_GE(s.epsilon[i], -1.0);
      ASSERT_LE(s.epsilon[i], 1.0);
      const double moved = alpha.values[i] + s.delta.values[i];
      ASSERT_GE(moved, 0.0);
      ASSERT_LE(moved, 1.0);
      const double raw = alpha.values[i] + s.epsilon[i];
      if (raw >= 0.0 && raw <= 1.0) {
        ASSERT_EQ(std::bit_cast<std::uint64_t>(s.delta.values[i]), std::bit_cast<std::uint64_t>(s.epsilon[i]));
      } else {
        ++clipped;
        ASSERT_LE(std::abs(s.delta.values[i]), std::abs(s.epsilon[i]));
      }
    }
  }
  // With alpha ~ U[0,1] and eps ~ U[-1,1], P(alpha + eps > 1) = E[alpha / 2] = 1/4,
  // and the same below 0.
  EXPECT_NEAR(static_cast<double>(clipped) / 300000.0, 0.5, 0.01);
}

TEST(SampleEpsilon, SameSeedSameDraws) {
  SeededRng a(3), b(3);
  const AttributeVector alpha(vec({0.1, 0.5, 0.9}));
  for (int k = 0; k < 10; ++k) {
    EXPECT_EQ(sample_epsilon(alpha, a).epsilon, sample_epsilon(alpha, b).epsilon);
  }
}

TEST(ApplyEdit, AddsTheWeightedColumns) {
  Matrix d(2, 2);
  d << 1.0, 2.0, 3.0, 4.0;
  const ColumnSteering steer(d);
  const LatentVector z(vec({0.5, -0.5}));
  const LatentVector out = apply_edit(z, steer, EditDelta(vec({0.1, 0.2})));
  EXPECT_DOUBLE_EQ(out.values[0], 0.5 + 0.1 * 1.0 + 0.2 * 2.0);
  EXPECT_DOUBLE_EQ(out.values[1], -0.5 + 0.1 * 3.0 + 0.2 * 4.0);
}

TEST(ApplyEdit, ZeroDeltaIsIdentity) {
  const ColumnSteering steer(Matrix::Constant(3, 2, 7.0));
  const LatentVector z(vec({1.0, 2.0, 3.0}));
  EXPECT_EQ(apply_edit(z, steer, EditDelta::zeros(2)).values, z.values);
}

TEST(ApplyEdit, GlobalEditsAreAdditive) {
  SeededRng rng(9);
  const ColumnSteering steer(Matrix::Random(6, 3));
  for (int trial = 0; trial < 100; ++trial) {
    const LatentVector z(rng.normal_vector(6));
    const EditDelta d1(rng.uniform_vector(3, -0.5, 0.5)), d2(rng.uniform_vector(3, -0.5, 0.5));
    const LatentVector once = apply_edit(z, steer, EditDelta(d1.values + d2.values));
    const LatentVector twice = apply_edit(apply_edit(z, steer, d1), steer, d2);
    EXPECT_LE((once.values - twice.values).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(ApplyEdit, UnitColumnShiftsOneCoordinate) {
  Matrix d = Matrix::Zero(4, 3);
  d(0, 0) = 1.0;
  const LatentVector z(vec({0.1, 0.2, 0.3, 0.4}));
  const LatentVector out = apply_edit(z, ColumnSteering(d), EditDelta(vec({0.3, 0.0, 0.0})));
  EXPECT_EQ(out.values, vec({0.1 + 0.3, 0.2, 0.3, 0.4}));
}

TEST(ApplyEdit, ShapeMismatchThrows) {
  const ColumnSteering steer(Matrix::Zero(3, 2));
  EXPECT_THROW(apply_edit(LatentVector(vec({1.0, 2.0})), steer, EditDelta::zeros(2)), DimensionError);
  EXPECT_THROW(apply_edit(LatentVector(vec({1.0, 2.0, 3.0})), steer, EditDelta::zeros(3)), DimensionError);
}

TEST(SeededRng, SubstreamsDependOnlyOnKeys) {
  const SeededRng root(5);
  SeededRng a = root.substream(3, 1);
  SeededRng b = SeededRng(5).substream(3, 1);
  SeededRng c = root.substream(1, 3);
  const Vector va = a.normal_vector(4);
  EXPECT_EQ(va, b.normal_vector(4));
  EXPECT_NE(va, c.normal_vector(4));
}

}  // namespace
}  // namespace latent_steer
