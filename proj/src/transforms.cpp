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

#include "latent_steer/transforms.hpp"

#include <cmath>
#include <limits>

#include "latent_steer/errors.hpp"

namespace latent_steer {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using MatMap = Eigen::Map<RowMatrix>;

constexpr int kMlpLayers = 3;

std::string layer_name(Index attr, int layer, const char* what) {
  return "mlp" + std::to_string(attr) + ".fc" + std::to_string(layer) + "." + what;
}

}  // namespace

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::kGlobalLinear:
      return "global-linear";
    case TransformKind::kLocalLinear:
      return "local-linear";
    case TransformKind::kLocalMlp:
      return "local-mlp";
  }
  return "unknown";
}

TransformKind parse_transform_kind(std::string_view name) {
  if (name == "global-linear") return TransformKind::kGlobalLinear;
  if (name == "local-linear") return TransformKind::kLocalLinear;
  if (name == "local-mlp") return TransformKind::kLocalMlp;
  throw ConfigError("transform.kind", "unknown transform kind '" + std::string(name) + "'");
}

Index ParamEntry::size() const {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

Index ParamManifest::total_size() const {
  Index n = 0;
  for (const auto& e : entries_) n += e.size();
  return n;
}

Index ParamManifest::offset(std::string_view name) const {
  Index off = 0;
  for (const auto& e : entries_) {
    if (e.name == name) return off;
    off += e.size();
  }
  throw PreconditionError("manifest has no entry '" + std::string(name) + "'");
}

bool ParamManifest::operator==(const ParamManifest& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.shape != b.shape || a.init != b.init) return false;
  }
  return true;
}

ParamManifest make_manifest(TransformKind kind, Index m, Index n) {
  std::vector<ParamEntry> entries;
  switch (kind) {
    case TransformKind::kGlobalLinear:
      entries.push_back({"directions", {m, n}, "normal(0,0.1)"});
      break;
    case TransformKind::kLocalLinear:
      for (Index i = 0; i < n; ++i) {
        entries.push_back({"linear" + std::to_string(i) + ".weight", {m, m}, "uniform_fan_in"});
        entries.push_back({"linear" + std::to_string(i) + ".bias", {m}, "zeros"});
      }
      break;
    case TransformKind::kLocalMlp:
      for (Index i = 0; i < n; ++i) {
        for (int l = 0; l < kMlpLayers; ++l) {
          entries.push_back({layer_name(i, l, "weight"), {m, m}, "uniform_fan_in"});
          entries.push_back({layer_name(i, l, "bias"), {m}, "zeros"});
        }
      }
      break;
  }
  return ParamManifest(std::move(entries));
}

TransformModule::TransformModule(TransformKind kind, Index latent_dim, Index num_attributes,
                                 Normalization normalization, double leaky_slope)
    : kind_(kind),
      m_(latent_dim),
      n_(num_attributes),
      normalization_(normalization),
      leaky_slope_(leaky_slope),
      manifest_(make_manifest(kind, latent_dim, num_attributes)) {
  if (m_ < 1 || n_ < 1) {
    throw PreconditionError("transform dimensions must be positive");
  }
  if (normalization_.enabled && !(normalization_.scale > 0.0)) {
    throw PreconditionError("normalization scale must be positive");
  }
  params_ = Vector::Zero(manifest_.total_size());
}

void TransformModule::set_params(const Vector& params) {
  if (params.size() != params_.size()) {
    throw DimensionError("transform expects " + std::to_string(params_.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  params_ = params;
}

void TransformModule::check_latent(const LatentVector& z) const {
  if (z.dim() != m_) {
    throw DimensionError("transform expects latent of size " + std::to_string(m_) + ", got " +
                         std::to_string(z.dim()));
  }
}

Vector TransformModule::raw_direction(Index i, const Vector& z) const {
  const double* p = params_.data();
  switch (kind_) {
    case TransformKind::kGlobalLinear: {
      ConstMatMap d(p, m_, n_);
      return d.col(i);
    }
    case TransformKind::kLocalLinear: {
      const Index off = i * (m_ * m_ + m_);
      ConstMatMap w(p + off, m_, m_);
      Eigen::Map<const Vector> b(p + off + m_ * m_, m_);
      return w * z + b;
    }
    case TransformKind::kLocalMlp: {
      Index off = i * kMlpLayers * (m_ * m_ + m_);
      Vector h = z;
      for (int l = 0; l < kMlpLayers; ++l) {
        ConstMatMap w(p + off, m_, m_);
        Eigen::Map<const Vector> b(p + off + m_ * m_, m_);
        off += m_ * m_ + m_;
        Vector a = w * h + b;
        if (l + 1 < kMlpLayers) {
          h = a.unaryExpr([s = leaky_slope_](double x) { return x > 0.0 ? x : s * x; });
        } else {
          h = std::move(a);
        }
      }
      return h;
    }
  }
  return Vector::Zero(m_);
}

Matrix TransformModule::directions(const LatentVector& z) const {
  check_latent(z);
  Matrix out(m_, n_);
  for (Index i = 0; i < n_; ++i) {
    Vector d = raw_direction(i, z.values);
    if (normalization_.enabled) {
      const double norm = d.norm();
      if (!(norm > 0.0)) {
        throw DegenerateDirectionError("direction " + std::to_string(i) +
                                       " has zero norm and cannot be normalized");
      }
      d *= normalization_.scale / norm;
    }
    out.col(i) = d;
  }
  return out;
}

Vector TransformModule::displacement(const LatentVector& z, const EditDelta& delta) const {
  if (delta.dim() != n_) {
    throw DimensionError("delta has " + std::to_string(delta.dim()) + " components, transform has " +
                         std::to_string(n_));
  }
  return directions(z) * delta.values;
}

TransformGradient TransformModule::vjp(const LatentVector& z, const EditDelta& delta,
                                       const Vector& upstream) const {
  check_latent(z);
  if (delta.dim() != n_ || upstream.size() != m_) {
    throw DimensionError("transform vjp: delta/upstream shape mismatch");
  }
  TransformGradient grad{Vector::Zero(params_.size()), upstream};
  const double* p = params_.data();
  double* gp = grad.params.data();

  for (Index i = 0; i < n_; ++i) {
    // Upstream for the (possibly normalized) column i.
    Vector g_col = delta.values[i] * upstream;
    if (normalization_.enabled) {
      const Vector u = raw_direction(i, z.values);
      const double norm = u.norm();
      if (!(norm > 0.0)) {
        throw DegenerateDirectionError("direction " + std::to_string(i) + " has zero norm");
      }
      const Vector uh = u / norm;
      g_col = (normalization_.scale / norm) * (g_col - uh.dot(g_col) * uh);
    }

    switch (kind_) {
      case TransformKind::kGlobalLinear: {
        MatMap gd(gp, m_, n_);
        gd.col(i) += g_col;
        break;
      }
      case TransformKind::kLocalLinear: {
        const Index off = i * (m_ * m_ + m_);
        ConstMatMap w(p + off, m_, m_);
        MatMap gw(gp + off, m_, m_);
        Eigen::Map<Vector> gb(gp + off + m_ * m_, m_);
        gw.noalias() += g_col * z.values.transpose();
        gb += g_col;
        grad.latent.noalias() += w.transpose() * g_col;
        break;
      }
      case TransformKind::kLocalMlp: {
        const Index layer_size = m_ * m_ + m_;
        const Index base = i * kMlpLayers * layer_size;
        // Forward pass, keeping pre-activations.
        std::vector<Vector> inputs(kMlpLayers);
        std::vector<Vector> pre(kMlpLayers);
        Vector h = z.values;
        for (int l = 0; l < kMlpLayers; ++l) {
          const Index off = base + l * layer_size;
          ConstMatMap w(p + off, m_, m_);
          Eigen::Map<const Vector> b(p + off + m_ * m_, m_);
          inputs[l] = h;
          pre[l] = w * h + b;
          if (l + 1 < kMlpLayers) {
            h = pre[l].unaryExpr([s = leaky_slope_](double x) { return x > 0.0 ? x : s * x; });
          }
        }
        Vector g = g_col;
        for (int l = kMlpLayers - 1; l >= 0; --l) {
          const Index off = base + l * layer_size;
          if (l + 1 < kMlpLayers) {
            for (Index k = 0; k < m_; ++k) {
              if (!(pre[l][k] > 0.0)) g[k] *= leaky_slope_;
            }
          }
          ConstMatMap w(p + off, m_, m_);
          MatMap gw(gp + off, m_, m_);
          Eigen::Map<Vector> gb(gp + off + m_ * m_, m_);
          gw.noalias() += g * inputs[l].transpose();
          gb += g;
          g = w.transpose() * g;
        }
        grad.latent += g;
        break;
      }
    }
  }
  return grad;
}

double TransformModule::activation_margin(const LatentVector& z) const {
  check_latent(z);
  double margin = std::numeric_limits<double>::infinity();
  if (kind_ != TransformKind::kLocalMlp) return margin;
  const double* p = params_.data();
  for (Index i = 0; i < n_; ++i) {
    Index off = i * kMlpLayers * (m_ * m_ + m_);
    Vector h = z.values;
    for (int l = 0; l + 1 < kMlpLayers; ++l) {
      ConstMatMap w(p + off, m_, m_);
      Eigen::Map<const Vector> b(p + off + m_ * m_, m_);
      off += m_ * m_ + m_;
      const Vector a = w * h + b;
      margin = std::min(margin, a.cwiseAbs().minCoeff());
      h = a.unaryExpr([s = leaky_slope_](double x) { return x > 0.0 ? x : s * x; });
    }
  }
  return margin;
}

void TransformModule::snap_to_float32() {
  for (Index k = 0; k < params_.size(); ++k) {
    params_[k] = static_cast<double>(static_cast<float>(params_[k]));
  }
}

TransformModule init_transform(TransformKind kind, Index latent_dim, Index num_attributes,
                               SeededRng& rng, Normalization normalization) {
  TransformModule t(kind, latent_dim, num_attributes, normalization);
  Vector params(t.manifest().total_size());
  Index off = 0;
  for (const auto& entry : t.manifest().entries()) {
    const Index size = entry.size();
    if (entry.init == "normal(0,0.1)") {
      for (Index k = 0; k < size; ++k) params[off + k] = 0.1 * rng.normal();
    } else if (entry.init == "uniform_fan_in") {
      const double a = std::sqrt(1.0 / static_cast<double>(entry.shape.back()));
      for (Index k = 0; k < size; ++k) params[off + k] = rng.uniform(-a, a);
    } else {
      params.segment(off, size).setZero();
    }
    off += size;
  }
  t.set_params(params);
  return t;
}

}  // namespace latent_steer
