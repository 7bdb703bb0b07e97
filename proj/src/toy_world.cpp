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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "latent_steer/errors.hpp"

namespace latent_steer::toy {

namespace {

constexpr Index kS = kImageSize;
constexpr Index kPixels = kS * kS;
constexpr Index kCorner = 4;
constexpr Index kCentreLo = 15;
constexpr Index kCentreHi = 17;
constexpr Index kPool = 4;
constexpr Index kDown = kS / kPool;
constexpr double kProbClamp = 1e-6;

double dsigmoid(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

Image pixel_distances(double center) {
  Image d(kS, kS);
  for (Index i = 0; i < kS; ++i) {
    for (Index j = 0; j < kS; ++j) {
      const double dx = static_cast<double>(j) + 0.5 - center;
      const double dy = static_cast<double>(i) + 0.5 - center;
      d(i, j) = std::sqrt(dx * dx + dy * dy);
    }
  }
  return d;
}

void check_image(const Image& img) {
  if (img.rows() != kS || img.cols() != kS) {
    throw DimensionError("toy models expect 32x32 images, got " + std::to_string(img.rows()) +
                         "x" + std::to_string(img.cols()));
  }
}

void check_latent(const LatentVector& z) {
  if (z.dim() != kLatentDim) {
    throw DimensionError("toy world expects 8-dimensional latents, got " +
                         std::to_string(z.dim()));
  }
}

bool in_corner(Index i, Index j) {
  const bool row = i < kCorner || i >= kS - kCorner;
  const bool col = j < kCorner || j >= kS - kCorner;
  return row && col;
}

bool in_centre(Index i, Index j) {
  return i >= kCentreLo && i <= kCentreHi && j >= kCentreLo && j <= kCentreHi;
}

struct RegressorStats {
  double bg;
  double fg;
  double mean;
};

RegressorStats stats(const Image& img) {
  double corner_sum = 0.0;
  for (Index i = 0; i < kS; ++i) {
    for (Index j = 0; j < kS; ++j) {
      if (in_corner(i, j)) corner_sum += img(i, j);
    }
  }
  const double fg = img.block(kCentreLo, kCentreLo, 3, 3).sum() / 9.0;
  return {corner_sum / static_cast<double>(4 * kCorner * kCorner), fg,
          img.sum() / static_cast<double>(kPixels)};
}

}  // namespace

// ---------------------------------------------------------------- generator

ToyGenerator::ToyGenerator(const ToyConfig& cfg)
    : cfg_(cfg), distance_(pixel_distances(cfg.center)), texture_(kPixels, kTextureDim) {
  SeededRng rng(cfg.texture_seed);
  const double kmax = 2.0 * std::numbers::pi * 3.0 / static_cast<double>(kS);
  for (Index k = 0; k < kTextureDim; ++k) {
    Image field = Image::Zero(kS, kS);
    for (int wave = 0; wave < 6; ++wave) {
      const double kx = rng.uniform(-1.0, 1.0) * kmax;
      const double ky = rng.uniform(-1.0, 1.0) * kmax;
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double amp = rng.normal();
      for (Index i = 0; i < kS; ++i) {
        for (Index j = 0; j < kS; ++j) {
          field(i, j) += amp * std::sin(kx * (static_cast<double>(j) + 0.5) +
                                        ky * (static_cast<double>(i) + 0.5) + phase);
        }
      }
    }
    // Point-antisymmetric about the centre, tapered to zero around it.
    Image anti(kS, kS);
    for (Index i = 0; i < kS; ++i) {
      for (Index j = 0; j < kS; ++j) {
        if (i * kS + j > (kS - 1 - i) * kS + (kS - 1 - j)) continue;
        const double taper = smoothstep((distance_(i, j) - 2.5) / 3.5);
        const double v = 0.5 * (field(i, j) - field(kS - 1 - i, kS - 1 - j)) * taper;
        anti(i, j) = v;
        anti(kS - 1 - i, kS - 1 - j) = -v;
      }
    }
    const double rms = std::sqrt(anti.square().mean());
    anti *= cfg.texture_rms / rms;
    texture_.col(k) = Eigen::Map<const Vector>(anti.data(), kPixels);
  }
}

Image ToyGenerator::forward(const LatentVector& z) const {
  check_latent(z);
  const double b = sigmoid(z.values[0]);
  const double r = cfg_.radius_base + cfg_.radius_span * sigmoid(z.values[1]);
  const double c = sigmoid(z.values[2]);
  const Vector u = texture_ * z.values.tail(kTextureDim);
  Image img(kS, kS);
  for (Index i = 0; i < kS; ++i) {
    for (Index j = 0; j < kS; ++j) {
      const double mask = sigmoid((r - distance_(i, j)) / cfg_.edge_softness);
      img(i, j) = b * (1.0 - mask) + c * mask + cfg_.texture_amplitude * std::tanh(u[i * kS + j]);
    }
  }
  return img;
}

Vector ToyGenerator::vjp(const LatentVector& z, const Image& upstream) const {
  check_latent(z);
  check_image(upstream);
  const double b = sigmoid(z.values[0]);
  const double r = cfg_.radius_base + cfg_.radius_span * sigmoid(z.values[1]);
  const double c = sigmoid(z.values[2]);
  const Vector u = texture_ * z.values.tail(kTextureDim);

  double g_b = 0.0;
  double g_c = 0.0;
  double g_r = 0.0;
  Vector g_u(kPixels);
  for (Index i = 0; i < kS; ++i) {
    for (Index j = 0; j < kS; ++j) {
      const double g = upstream(i, j);
      const double mask = sigmoid((r - distance_(i, j)) / cfg_.edge_softness);
      g_b += g * (1.0 - mask);
      g_c += g * mask;
      g_r += g * (c - b) * mask * (1.0 - mask) / cfg_.edge_softness;
      const double t = std::tanh(u[i * kS + j]);
      g_u[i * kS + j] = g * cfg_.texture_amplitude * (1.0 - t * t);
    }
  }
  Vector grad(kLatentDim);
  grad[0] = g_b * dsigmoid(z.values[0]);
  grad[1] = g_r * cfg_.radius_span * dsigmoid(z.values[1]);
  grad[2] = g_c * dsigmoid(z.values[2]);
  grad.tail(kTextureDim) = texture_.transpose() * g_u;
  return grad;
}

std::vector<double> ToyGenerator::parameters() const {
  return {texture_.data(), texture_.data() + texture_.size()};
}

// ---------------------------------------------------------------- regressor

AttributeVector ToyRegressor::forward(const Image& img) const {
  check_image(img);
  const auto [bg, fg, mean] = stats(img);
  const double contrast = fg - bg;
  const double sign = contrast >= 0.0 ? 1.0 : -1.0;
  const double coverage = (mean - bg) / (contrast + cfg_.coverage_guard * sign);
  const double radius =
      coverage > 0.0 ? std::sqrt(coverage * static_cast<double>(kPixels) / std::numbers::pi) : 0.0;
  const double size = std::clamp((radius - cfg_.radius_base) / cfg_.radius_span, 0.0, 1.0);
  const double k2 = contrast * contrast;
  const double f2 = cfg_.contrast_floor * cfg_.contrast_floor;
  const double weight = k2 / (k2 + f2);

  Vector alpha(kNumAttributes);
  alpha[0] = std::clamp(bg, 0.0, 1.0);
  alpha[1] = weight * size + (1.0 - weight) * 0.5;
  alpha[2] = std::clamp(fg, 0.0, 1.0);
  return AttributeVector(std::move(alpha));
}

Image ToyRegressor::vjp(const Image& img, const Vector& upstream) const {
  check_image(img);
  if (upstream.size() != kNumAttributes) {
    throw DimensionError("regressor vjp expects 3 upstream components");
  }
  const auto [bg, fg, mean] = stats(img);
  const double contrast = fg - bg;
  const double sign = contrast >= 0.0 ? 1.0 : -1.0;
  const double denom = contrast + cfg_.coverage_guard * sign;
  const double coverage = (mean - bg) / denom;
  const double radius =
      coverage > 0.0 ? std::sqrt(coverage * static_cast<double>(kPixels) / std::numbers::pi) : 0.0;
  const double raw = (radius - cfg_.radius_base) / cfg_.radius_span;
  const double size = std::clamp(raw, 0.0, 1.0);
  const double k2 = contrast * contrast;
  const double f2 = cfg_.contrast_floor * cfg_.contrast_floor;
  const double weight = k2 / (k2 + f2);

  double g_bg = (bg >= 0.0 && bg <= 1.0) ? upstream[0] : 0.0;
  double g_fg = (fg >= 0.0 && fg <= 1.0) ? upstream[2] : 0.0;
  double g_mean = 0.0;

  const double g_size = upstream[1] * weight;
  const double g_weight = upstream[1] * (size - 0.5);
  double g_contrast = g_weight * 2.0 * contrast * f2 / ((k2 + f2) * (k2 + f2));

  if (raw > 0.0 && raw < 1.0 && coverage > 0.0) {
    const double g_radius = g_size / cfg_.radius_span;
    const double g_cov = g_radius * (static_cast<double>(kPixels) / std::numbers::pi) / (2.0 * radius);
    g_mean += g_cov / denom;
    g_bg -= g_cov / denom;
    g_contrast -= g_cov * coverage / denom;
  }
  g_fg += g_contrast;
  g_bg -= g_contrast;

  Image grad = Image::Constant(kS, kS, g_mean / static_cast<double>(kPixels));
  const double per_corner = g_bg / static_cast<double>(4 * kCorner * kCorner);
  for (Index i = 0; i < kS; ++i) {
    for (Index j = 0; j < kS; ++j) {
      if (in_corner(i, j)) grad(i, j) += per_corner;
      if (in_centre(i, j)) grad(i, j) += g_fg / 9.0;
    }
  }
  return grad;
}

// ------------------------------------------------------------ discriminator

ToyDiscriminator::ToyDiscriminator(const ToyConfig& cfg) : cfg_(cfg), hf_mask_(kS, kS) {
  const Image dist = pixel_distances(cfg.center);
  const double band_lo = cfg.radius_base - 2.0 * cfg.edge_softness;
  const double band_hi = cfg.radius_base + cfg.radius_span + 2.0 * cfg.edge_softness;
  for (Index i = 0; i < kS; ++i) {
    for (Index j = 0; j < kS; ++j) {
      const bool interior = i > 0 && j > 0 && i < kS - 1 && j < kS - 1;
      const bool in_band = dist(i, j) >= band_lo && dist(i, j) <= band_hi;
      hf_mask_(i, j) = interior && !in_band;
      hf_count_ += hf_mask_(i, j) ? 1 : 0;
    }
  }
}

Image ToyDiscriminator::laplacian(const Image& img) const {
  check_image(img);
  Image lap = Image::Zero(kS, kS);
  for (Index i = 1; i < kS - 1; ++i) {
    for (Index j = 1; j < kS - 1; ++j) {
      if (!hf_mask_(i, j)) continue;
      lap(i, j) = 4.0 * img(i, j) - img(i - 1, j) - img(i + 1, j) - img(i, j - 1) - img(i, j + 1);
    }
  }
  return lap;
}

double ToyDiscriminator::high_frequency(const Image& img) const {
  return laplacian(img).abs().sum() / static_cast<double>(hf_count_);
}

double ToyDiscriminator::offness(const Image& img) const {
  check_image(img);
  const double range = ((img - 1.0).max(0.0) + (-img).max(0.0)).mean();
  return range + std::max(high_frequency(img) - 2.0 * cfg_.texture_amplitude, 0.0);
}

double ToyDiscriminator::forward(const Image& img) const {
  return sigmoid(10.0 * (0.05 - offness(img)));
}

Image ToyDiscriminator::vjp(const Image& img, double upstream) const {
  check_image(img);
  const double d = forward(img);
  const double g_off = upstream * (-10.0 * d * (1.0 - d));

  Image grad(kS, kS);
  for (Index i = 0; i < kS; ++i) {
    for (Index j = 0; j < kS; ++j) {
      const double v = img(i, j);
      grad(i, j) = g_off * ((v > 1.0 ? 1.0 : 0.0) - (v < 0.0 ? 1.0 : 0.0)) /
                   static_cast<double>(kPixels);
    }
  }

  const Image lap = laplacian(img);
  const double hf = lap.abs().sum() / static_cast<double>(hf_count_);
  if (hf > 2.0 * cfg_.texture_amplitude) {
    const double scale = g_off / static_cast<double>(hf_count_);
    for (Index i = 1; i < kS - 1; ++i) {
      for (Index j = 1; j < kS - 1; ++j) {
        if (!hf_mask_(i, j) || lap(i, j) == 0.0) continue;
        const double s = scale * (lap(i, j) > 0.0 ? 1.0 : -1.0);
        grad(i, j) += 4.0 * s;
        grad(i - 1, j) -= s;
        grad(i + 1, j) -= s;
        grad(i, j - 1) -= s;
        grad(i, j + 1) -= s;
      }
    }
  }
  return grad;
}

// ----------------------------------------------------------------- features

FeatureMaps PyramidFeatures::forward(const Image& img) const {
  FeatureMaps maps;
  for (int f : kFactors) {
    const Index rows = img.rows() / f;
    const Index cols = img.cols() / f;
    Image m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) {
        m(i, j) = img.block(i * f, j * f, f, f).mean();
      }
    }
    maps.push_back(std::move(m));
  }
  return maps;
}

Image PyramidFeatures::vjp(const Image& img, const FeatureMaps& upstream) const {
  if (upstream.size() != std::size(kFactors)) {
    throw DimensionError("pyramid vjp expects 4 upstream maps");
  }
  Image grad = Image::Zero(img.rows(), img.cols());
  for (size_t l = 0; l < upstream.size(); ++l) {
    const int f = kFactors[l];
    const Image& g = upstream[l];
    if (g.rows() != img.rows() / f || g.cols() != img.cols() / f) {
      throw DimensionError("pyramid vjp: upstream map " + std::to_string(l) + " has wrong shape");
    }
    const double inv = 1.0 / static_cast<double>(f * f);
    for (Index i = 0; i < img.rows(); ++i) {
      for (Index j = 0; j < img.cols(); ++j) {
        grad(i, j) += g(i / f, j / f) * inv;
      }
    }
  }
  return grad;
}

// ----------------------------------------------------------------- identity

ToyIdentityEmbedder::ToyIdentityEmbedder(const ToyConfig& cfg) {
  // Orthonormal basis of the point-antisymmetric subspace of the 8x8 grid.
  Matrix basis = Matrix::Zero(kIdentityDim, kDown * kDown);
  Index row = 0;
  const double h = 1.0 / std::sqrt(2.0);
  for (Index k = 0; k < kDown * kDown; ++k) {
    const Index mirror = kDown * kDown - 1 - k;
    if (k < mirror) {
      basis(row, k) = h;
      basis(row, mirror) = -h;
      ++row;
    }
  }
  SeededRng rng(cfg.identity_seed);
  Matrix gauss(kIdentityDim, kIdentityDim);
  for (Index i = 0; i < kIdentityDim; ++i) {
    for (Index j = 0; j < kIdentityDim; ++j) gauss(i, j) = rng.normal();
  }
  const Matrix q = Eigen::HouseholderQR<Matrix>(gauss).householderQ();
  projection_ = q * basis;
}

Vector ToyIdentityEmbedder::downsample(const Image& img) const {
  check_image(img);
  Vector x(kDown * kDown);
  for (Index i = 0; i < kDown; ++i) {
    for (Index j = 0; j < kDown; ++j) {
      x[i * kDown + j] = img.block(i * kPool, j * kPool, kPool, kPool).mean();
    }
  }
  return x;
}

namespace {

Vector canonical_embedding() {
  Vector e = Vector::Zero(kIdentityDim);
  e[0] = 1.0;
  return e;
}

bool negligible(double norm, const Vector& x) {
  return !(norm > 1e-12 * std::max(1.0, x.norm()));
}

}  // namespace

Vector ToyIdentityEmbedder::forward(const Image& img) const {
  const Vector x = downsample(img);
  const Vector e = projection_ * x;
  const double norm = e.norm();
  if (negligible(norm, x)) return canonical_embedding();
  return e / norm;
}

Image ToyIdentityEmbedder::vjp(const Image& img, const Vector& upstream) const {
  if (upstream.size() != kIdentityDim) {
    throw DimensionError("identity vjp expects a 32-component upstream");
  }
  const Vector x = downsample(img);
  const Vector e = projection_ * x;
  const double norm = e.norm();
  Image grad = Image::Zero(kS, kS);
  if (negligible(norm, x)) return grad;
  const Vector unit = e / norm;
  const Vector g_e = (upstream - unit.dot(upstream) * unit) / norm;
  const Vector g_x = projection_.transpose() * g_e;
  for (Index i = 0; i < kS; ++i) {
    for (Index j = 0; j < kS; ++j) {
      grad(i, j) = g_x[(i / kPool) * kDown + j / kPool] / static_cast<double>(kPool * kPool);
    }
  }
  return grad;
}

std::vector<double> ToyIdentityEmbedder::parameters() const {
  return {projection_.data(), projection_.data() + projection_.size()};
}

// -------------------------------------------------------------------- kinks

bool near_kink(const Image& img, const ToyConfig& cfg, double tol) {
  check_image(img);
  auto near = [tol](double v, double at) { return std::abs(v - at) < tol; };
  for (Index k = 0; k < img.size(); ++k) {
    if (near(img.data()[k], 0.0) || near(img.data()[k], 1.0)) return true;
  }
  const auto [bg, fg, mean] = stats(img);
  if (near(bg, 0.0) || near(bg, 1.0) || near(fg, 0.0) || near(fg, 1.0)) return true;
  const double contrast = fg - bg;
  if (near(contrast, 0.0)) return true;
  const double sign = contrast >= 0.0 ? 1.0 : -1.0;
  const double coverage = (mean - bg) / (contrast + cfg.coverage_guard * sign);
  if (near(coverage, 0.0)) return true;
  if (coverage > 0.0) {
    const double radius = std::sqrt(coverage * static_cast<double>(kPixels) / std::numbers::pi);
    const double raw = (radius - cfg.radius_base) / cfg.radius_span;
    if (near(raw, 0.0) || near(raw, 1.0)) return true;
  }
  const ToyDiscriminator disc(cfg);
  const double threshold = 2.0 * cfg.texture_amplitude;
  const double hf = disc.high_frequency(img);
  if (near(hf, threshold)) return true;
  if (hf > threshold) {
    const Image lap = disc.laplacian(img);
    for (Index k = 0; k < lap.size(); ++k) {
      if (lap.data()[k] != 0.0 && near(lap.data()[k], 0.0)) return true;
    }
  }
  return false;
}

// ------------------------------------------------------------------- bundle

std::shared_ptr<const ToyGenerator> make_generator(const ToyConfig& cfg) {
  return std::make_shared<const ToyGenerator>(cfg);
}

ModelBundle make_bundle(const ToyConfig& cfg) {
  ModelBundle bundle;
  bundle.generator = make_generator(cfg);
  bundle.regressor = std::make_shared<const ToyRegressor>(cfg);
  bundle.discriminator = std::make_shared<const ToyDiscriminator>(cfg);
  bundle.features = std::make_shared<const PyramidFeatures>();
  bundle.identity = std::make_shared<const ToyIdentityEmbedder>(cfg);
  bundle.attribute_names = {"background", "size", "disk"};
  return bundle;
}

// ------------------------------------------------------------------- oracle

AttributeVector oracle_attributes(const LatentVector& z) {
  check_latent(z);
  Vector a(kNumAttributes);
  for (Index i = 0; i < kNumAttributes; ++i) a[i] = sigmoid(z.values[i]);
  return AttributeVector(std::move(a));
}

Vector oracle_direction(const LatentVector& z, Index attribute, double delta_i) {
  check_latent(z);
  if (attribute < 0 || attribute >= kNumAttributes) {
    throw PreconditionError("oracle_direction: attribute index out of range");
  }
  Vector dz = Vector::Zero(kLatentDim);
  if (delta_i == 0.0) return dz;
  const double alpha = sigmoid(z.values[attribute]);
  const double target = alpha + delta_i;
  if (!(target > 0.0 && target < 1.0)) {
    throw PreconditionError("oracle_direction: target attribute " + std::to_string(target) +
                            " is outside (0,1)");
  }
  dz[attribute] = logit(target) - logit(alpha);
  return dz;
}

Vector OracleSteering::displacement(const LatentVector& z, const EditDelta& delta) const {
  check_latent(z);
  if (delta.dim() != kNumAttributes) {
    throw DimensionError("oracle steering expects a 3-component delta");
  }
  Vector dz = Vector::Zero(kLatentDim);
  for (Index i = 0; i < kNumAttributes; ++i) {
    if (delta.values[i] == 0.0) continue;
    const double alpha = sigmoid(z.values[i]);
    const double target = std::clamp(alpha + delta.values[i], kProbClamp, 1.0 - kProbClamp);
    dz[i] = logit(target) - logit(alpha);
  }
  return dz;
}

}  // namespace latent_steer::toy
