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

#include "latent_steer/toy_world.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "finite_difference.hpp"
#include "latent_steer/errors.hpp"

namespace latent_steer::toy {
namespace {

using testing::dot;
using testing::flatten;
using testing::numeric_gradient;
using testing::unflatten;

double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-10});
}

LatentVector random_latent(SeededRng& rng) { return LatentVector(rng.normal_vector(kLatentDim)); }

Image random_upstream(SeededRng& rng) {
  return unflatten(rng.normal_vector(kImageSize * kImageSize), kImageSize, kImageSize);
}

TEST(ToyGenerator, RendersBackgroundDiskAndZeroTextureAtOrigin) {
  const ToyGenerator gen(ToyConfig{});
  Vector z = Vector::Zero(kLatentDim);
  z[0] = -2.0;
  z[1] = 0.0;
  z[2] = 2.0;
  const Image img = gen.forward(LatentVector(z));
  // Texture vanishes at z_{3..7} = 0, so corners hold the background level and
  // the centre the disk level up to the soft edge.
  const double r = 4.0 + 8.0 * 0.5;
  const double corner_mask = sigmoid(r - std::sqrt(2.0 * 15.5 * 15.5));
  EXPECT_NEAR(img(0, 0), sigmoid(-2.0) * (1 - corner_mask) + sigmoid(2.0) * corner_mask, 1e-12);
  const double centre_mask = sigmoid(r - std::sqrt(0.5));
  EXPECT_NEAR(img(15, 15), sigmoid(-2.0) * (1 - centre_mask) + sigmoid(2.0) * centre_mask, 1e-12);
}

TEST(ToyGenerator, VjpMatchesFiniteDifferences) {
  const ToyGenerator gen(ToyConfig{});
  SeededRng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const LatentVector z = random_latent(rng);
    const Image u = random_upstream(rng);
    const Vector analytic = gen.vjp(z, u);
    const Vector numeric = numeric_gradient(
        [&](const Vector& x) { return dot(gen.forward(LatentVector(x)), u); }, z.values);
    EXPECT_LT(rel_err(analytic, numeric), 1e-6) << "trial " << trial;
  }
}

TEST(ToyGenerator, TextureIsPointAntisymmetricAndBlindToRegressorPatches) {
  const ToyGenerator gen(ToyConfig{});
  const Matrix& tex = gen.texture_projection();
  for (Index k = 0; k < kTextureDim; ++k) {
    const Image field = unflatten(tex.col(k), kImageSize, kImageSize);
    for (Index i = 0; i < kImageSize; ++i) {
      for (Index j = 0; j < kImageSize; ++j) {
        EXPECT_NEAR(field(i, j), -field(kImageSize - 1 - i, kImageSize - 1 - j), 1e-12);
      }
    }
    EXPECT_NEAR(std::sqrt(field.square().mean()), ToyConfig{}.texture_rms, 1e-12);
    EXPECT_NEAR(field.block(15, 15, 3, 3).abs().maxCoeff(), 0.0, 1e-12);
  }
}

TEST(ToyRegressor, MatchesGroundTruthAttributesOnTheManifold) {
  const ModelBundle bundle = make_bundle();
  SeededRng rng(5);
  double total = 0.0;
  int count = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const LatentVector z(rng.uniform_vector(kLatentDim, -3.0, 3.0));
    const Vector a = bundle.regressor->forward(bundle.generator->forward(z)).values;
    const Vector truth = oracle_attributes(z).values;
    total += (a - truth).cwiseAbs().sum();
    count += static_cast<int>(kNumAttributes);
  }
  EXPECT_LE(total / count, 0.02);
}

TEST(ToyRegressor, OutputsStayInUnitBox) {
  const ToyRegressor reg(ToyConfig{});
  SeededRng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const Image img = unflatten(rng.uniform_vector(1024, -0.5, 1.5), 32, 32);
    EXPECT_TRUE(reg.forward(img).valid());
  }
  EXPECT_TRUE(reg.forward(Image::Constant(32, 32, 0.3)).valid());
}

TEST(ToyRegressor, VjpMatchesFiniteDifferencesAwayFromKinks) {
  const ModelBundle bundle = make_bundle();
  const ToyRegressor reg(ToyConfig{});
  SeededRng rng(12);
  int checked = 0;
  while (checked < 30) {
    const Image img = bundle.generator->forward(random_latent(rng));
    if (near_kink(img)) continue;
    const Vector u = rng.normal_vector(kNumAttributes);
    const Vector analytic = flatten(reg.vjp(img, u));
    const Vector numeric = numeric_gradient(
        [&](const Vector& x) { return reg.forward(unflatten(x, 32, 32)).values.dot(u); },
        flatten(img));
    EXPECT_LT(rel_err(analytic, numeric), 1e-5) << "point " << checked;
    ++checked;
  }
}

TEST(ToyDiscriminator, ScoresManifoldImagesAsReal) {
  const ModelBundle bundle = make_bundle();
  SeededRng rng(7);
  double worst = 1.0;
  for (int trial = 0; trial < 2000; ++trial) {
    worst = std::min(worst, bundle.discriminator->forward(bundle.generator->forward(random_latent(rng))));
  }
  EXPECT_GE(worst, 0.6);
}

TEST(ToyDiscriminator, PenalizesOutOfRangeAndNoisyImages) {
  const ToyDiscriminator disc(ToyConfig{});
  const double flat = disc.forward(Image::Constant(32, 32, 0.5));
  EXPECT_NEAR(flat, sigmoid(0.5), 1e-12);
  EXPECT_LT(disc.forward(Image::Constant(32, 32, 1.5)), flat);
  SeededRng rng(8);
  const Image noise = unflatten(rng.uniform_vector(1024, 0.0, 1.0), 32, 32);
  EXPECT_LT(disc.forward(noise), 0.1);
}

TEST(ToyDiscriminator, VjpMatchesFiniteDifferencesAwayFromKinks) {
  const ModelBundle bundle = make_bundle();
  const ToyDiscriminator disc(ToyConfig{});
  SeededRng rng(13);
  int checked = 0;
  while (checked < 30) {
    Image img = bundle.generator->forward(random_latent(rng));
    img += unflatten(rng.normal_vector(1024), 32, 32) * (checked % 2 == 0 ? 0.08 : 0.02);
    if (near_kink(img)) continue;
    const double u = rng.normal();
    const Vector analytic = flatten(disc.vjp(img, u));
    const Vector numeric = numeric_gradient(
        [&](const Vector& x) { return u * disc.forward(unflatten(x, 32, 32)); }, flatten(img));
    EXPECT_LT(rel_err(analytic, numeric), 1e-5) << "point " << checked;
    ++checked;
  }
}

TEST(PyramidFeatures, ShapesAndAdjoint) {
  const PyramidFeatures feats;
  SeededRng rng(14);
  const Image img = random_upstream(rng);
  const FeatureMaps maps = feats.forward(img);
  ASSERT_EQ(maps.size(), 4u);
  EXPECT_EQ(maps[0].rows(), 32);
  EXPECT_EQ(maps[3].rows(), 4);
  EXPECT_NEAR(maps[3].mean(), img.mean(), 1e-12);
  FeatureMaps up;
  for (const auto& m : maps) up.push_back(unflatten(rng.normal_vector(m.size()), m.rows(), m.cols()));
  const Vector numeric = numeric_gradient(
      [&](const Vector& x) { return dot(feats.forward(unflatten(x, 32, 32)), up); }, flatten(img));
  EXPECT_LT(rel_err(flatten(feats.vjp(img, up)), numeric), 1e-8);
}

TEST(ToyIdentity, UnitNormAndInvariantToAttributeChanges) {
  const ModelBundle bundle = make_bundle();
  SeededRng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    LatentVector z = random_latent(rng);
    const Vector e = bundle.identity->forward(bundle.generator->forward(z));
    EXPECT_NEAR(e.norm(), 1.0, 1e-12);
    // Background, size and intensity are point-symmetric, so the
    // antisymmetric embedding ignores them.
    LatentVector moved = z;
    moved.values.head(3) = rng.normal_vector(3);
    const Vector e2 = bundle.identity->forward(bundle.generator->forward(moved));
    EXPECT_GT(e.dot(e2), 1.0 - 1e-9);
  }
}

TEST(ToyIdentity, TextureChangesMoveTheEmbedding) {
  const ModelBundle bundle = make_bundle();
  SeededRng rng(16);
  int below = 0;
  const int n = 200;
  for (int trial = 0; trial < n; ++trial) {
    LatentVector z = random_latent(rng);
    LatentVector moved = z;
    moved.values[3] += 2.0;
    const double cos = bundle.identity->forward(bundle.generator->forward(z))
                           .dot(bundle.identity->forward(bundle.generator->forward(moved)));
    below += cos < 0.95 ? 1 : 0;
  }
  EXPECT_GE(below, n * 9 / 10);
}

TEST(ToyIdentity, DegenerateInputMapsToCanonicalVector) {
  const ToyIdentityEmbedder id(ToyConfig{});
  const Vector e = id.forward(Image::Constant(32, 32, 0.4));
  EXPECT_DOUBLE_EQ(e[0], 1.0);
  EXPECT_DOUBLE_EQ(e.tail(kIdentityDim - 1).norm(), 0.0);
  EXPECT_DOUBLE_EQ(flatten(id.vjp(Image::Constant(32, 32, 0.4), Vector::Ones(kIdentityDim))).norm(), 0.0);
}

TEST(ToyIdentity, VjpMatchesFiniteDifferences) {
  const ModelBundle bundle = make_bundle();
  SeededRng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Image img = bundle.generator->forward(random_latent(rng));
    const Vector u = rng.normal_vector(kIdentityDim);
    const Vector numeric = numeric_gradient(
        [&](const Vector& x) { return bundle.identity->forward(unflatten(x, 32, 32)).dot(u); },
        flatten(img));
    EXPECT_LT(rel_err(flatten(bundle.identity->vjp(img, u)), numeric), 1e-6);
  }
}

TEST(Oracle, MovesGroundTruthAttributeExactly) {
  SeededRng rng(18);
  for (int trial = 0; trial < 100; ++trial) {
    const LatentVector z = random_latent(rng);
    const Index i = trial % kNumAttributes;
    const double alpha = sigmoid(z.values[i]);
    const double delta = rng.uniform(-alpha, 1.0 - alpha) * 0.99;
    const LatentVector moved(z.values + oracle_direction(z, i, delta));
    EXPECT_NEAR(oracle_attributes(moved).values[i], alpha + delta, 1e-9);
    for (Index k = 0; k < kLatentDim; ++k) {
      if (k != i) EXPECT_EQ(moved.values[k], z.values[k]);
    }
  }
}

TEST(Oracle, ZeroDeltaIsZeroAndOutOfRangeThrows) {
  const LatentVector z = LatentVector::zeros(kLatentDim);
  EXPECT_EQ(oracle_direction(z, 0, 0.0).norm(), 0.0);
  EXPECT_THROW(oracle_direction(z, 0, 0.5), PreconditionError);
  EXPECT_THROW(oracle_direction(z, 1, -0.6), PreconditionError);
  EXPECT_THROW(oracle_direction(z, 3, 0.1), PreconditionError);
}

LatentVector latent(std::initializer_list<double> head) {
  Vector z = Vector::Zero(kLatentDim);
  Index i = 0;
  for (double v : head) z[i++] = v;
  return LatentVector(z);
}

double block_mean(const Image& img, Index row, Index col, Index size) { return img.block(row, col, size, size).mean(); }

TEST(ToyExamples, OriginRendersFlatMidGray) {
  const ModelBundle bundle = make_bundle();
  const Image img = bundle.generator->forward(latent({}));
  EXPECT_TRUE((img.array() == 0.5).all());
  const AttributeVector a = bundle.regressor->forward(img);
  EXPECT_NEAR(a.values[0], 0.5, 0.01);
  EXPECT_NEAR(a.values[2], 0.5, 0.01);
  EXPECT_EQ(oracle_attributes(latent({})).values, Vector::Constant(3, 0.5));
}

TEST(ToyExamples, DarkDiskOnBrightBackground) {
  const ModelBundle bundle = make_bundle();
  const Image img = bundle.generator->forward(latent({4.0, 0.0, -4.0}));
  EXPECT_NEAR(block_mean(img, 0, 0, 4), sigmoid(4.0), 1e-3);
  EXPECT_NEAR(sigmoid(4.0), 0.982, 5e-4);
  EXPECT_LE(block_mean(img, 15, 15, 3), 0.05);
}

TEST(ToyExamples, RegressorReadsRenderedAttributes) {
  const ModelBundle bundle = make_bundle();
  const AttributeVector a = bundle.regressor->forward(bundle.generator->forward(latent({-3.0, 2.0, 3.0})));
  EXPECT_NEAR(a.values[0], 0.047, 0.03);
  EXPECT_NEAR(a.values[1], 0.881, 0.03);
  EXPECT_NEAR(a.values[2], 0.953, 0.03);
  EXPECT_NEAR(oracle_attributes(latent({std::log(9.0)})).values[0], 0.9, 1e-15);
}

TEST(ToyExamples, TextureLeavesCornerMeansAlone) {
  const ModelBundle bundle = make_bundle();
  SeededRng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Vector a = rng.normal_vector(kLatentDim), b = a;
    b.tail(kTextureDim) = rng.normal_vector(kTextureDim) * 2.0;
    const Image ia = bundle.generator->forward(LatentVector(a));
    const Image ib = bundle.generator->forward(LatentVector(b));
    // The pooled corner mean is the background estimate and does not see texture at all.
    double pooled_a = 0.0, pooled_b = 0.0;
    for (Index r : {0, 28}) {
      for (Index c : {0, 28}) {
        pooled_a += block_mean(ia, r, c, 4) / 4.0;
        pooled_b += block_mean(ib, r, c, 4) / 4.0;
        // A single patch still carries texture, bounded by the amplitude.
        EXPECT_LE(std::abs(block_mean(ia, r, c, 4) - block_mean(ib, r, c, 4)), 2.0 * ToyConfig{}.texture_amplitude);
      }
    }
    EXPECT_NEAR(pooled_a, pooled_b, 1e-15);
  }
}

TEST(ToyExamples, OracleDirectionIsLogitArithmetic) {
  const LatentVector z = latent({});
  const Vector up = oracle_direction(z, 0, 0.2);
  EXPECT_NEAR(up[0], std::log(0.7 / 0.3), 1e-15);
  EXPECT_NEAR(up[0], 0.8473, 5e-5);
  EXPECT_EQ(up.tail(kLatentDim - 1).norm(), 0.0);
  const Vector down = oracle_direction(z, 1, -0.2);
  EXPECT_DOUBLE_EQ(down[1], -std::log(0.7 / 0.3));
  const OracleSteering oracle;
  Vector d = Vector::Zero(3);
  d[0] = 0.2;
  const LatentVector moved = apply_edit(z, oracle, EditDelta(d));
  EXPECT_NEAR(moved.values[0], 0.8473, 5e-5);
  EXPECT_EQ(moved.values.tail(kLatentDim - 1).norm(), 0.0);
}

TEST(ToyExamples, OracleEditsKeepIdentity) {
  // Disk and background edits are point-symmetric, so the identity embedding cannot see them.
  const ModelBundle bundle = make_bundle();
  const OracleSteering oracle;
  SeededRng rng(32);
  double worst = 1.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const LatentVector z = random_latent(rng);
    const AttributeVector alpha = oracle_attributes(z);
    Vector eps = Vector::Zero(3);
    eps[trial % 3] = rng.uniform(-0.4, 0.4);
    const EditDelta delta = clip_delta(alpha, eps);
    const Image a = bundle.generator->forward(z);
    const Image b = bundle.generator->forward(apply_edit(z, oracle, delta));
    const Vector ea = bundle.identity->forward(a), eb = bundle.identity->forward(b);
    worst = std::min(worst, ea.dot(eb));
  }
  EXPECT_GE(worst, 0.999);
}

TEST(ToyExamples, ConstantImageGivesUninformativeSize) {
  // Zero contrast relaxes the size estimate to 0.5 rather than 0 (see ToyConfig::contrast_floor).
  const ModelBundle bundle = make_bundle();
  const AttributeVector a = bundle.regressor->forward(Image::Constant(32, 32, 0.3));
  EXPECT_NEAR(a.values[1], 0.5, 1e-12);
}

TEST(ToyModels, RejectWrongShapes) {
  const ModelBundle bundle = make_bundle();
  EXPECT_THROW(bundle.generator->forward(LatentVector::zeros(7)), DimensionError);
  EXPECT_THROW(bundle.regressor->forward(Image::Zero(16, 16)), DimensionError);
  EXPECT_THROW(bundle.discriminator->forward(Image::Zero(32, 31)), DimensionError);
}

}  // namespace
}  // namespace latent_steer::toy
