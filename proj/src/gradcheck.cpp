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

#include "latent_steer/gradcheck.hpp"

#include <cstdio>
#include <algorithm>
#include <chrono>
#include <sstream>

#include "latent_steer/errors.hpp"
#include "latent_steer/latent_core.hpp"
#include "latent_steer/losses.hpp"
#include "latent_steer/toy_world.hpp"
#include "latent_steer/trainer.hpp"

namespace latent_steer {

namespace {

Vector central_difference(const std::function<double(const Vector&)>& f, Vector x) {
  Vector g(x.size());
  for (Index k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + kGradcheckStep;
    const double up = f(x);
    x[k] = saved - kGradcheckStep;
    const double down = f(x);
    x[k] = saved;
    g[k] = (up - down) / (2.0 * kGradcheckStep);
  }
  return g;
}

Vector flat(const Image& img) { return Eigen::Map<const Vector>(img.data(), img.size()); }

Image shaped(const Vector& v, Index rows, Index cols) {
  Image img(rows, cols);
  Eigen::Map<Vector>(img.data(), img.size()) = v;
  return img;
}

void record(ComponentAudit& audit, int point, double err) {
  if (audit.worst_point < 0 || err > audit.max_relative_error) {
    audit.max_relative_error = err;
    audit.worst_point = point;
  }
}

}  // namespace

std::vector<ComponentAudit> audit_models(const ModelBundle& bundle, int n_points, std::uint64_t seed,
                                         const std::function<bool(const Image&)>& near_kink) {
  bundle.validate();
  if (n_points < 1) throw PreconditionError("audit_models: n_points must be at least 1");
  const Index m = bundle.latent_dim();
  const Index n_attr = bundle.num_attributes();
  const Index rows = bundle.generator->height();
  const Index cols = bundle.generator->width();
  const SeededRng root(seed);

  std::vector<ComponentAudit> audits{{"generator"}, {"regressor"}, {"discriminator"}, {"features"}, {"identity"}};
  for (auto& a : audits) a.n_points = n_points;

  // Draws an input image, redrawing near kinks. `noise` adds pixel noise.
  std::uint64_t draw = 0;
  auto draw_image = [&](SeededRng& rng, double noise, ComponentAudit& audit) {
    for (;;) {
      Image img = bundle.generator->forward(LatentVector(rng.normal_vector(m)));
      if (noise > 0.0) img += shaped(rng.normal_vector(rows * cols), rows, cols) * noise;
      if (near_kink && near_kink(img)) {
        ++audit.redrawn_points;
        continue;
      }
      return img;
    }
  };

  for (int p = 0; p < n_points; ++p) {
    SeededRng rng = root.substream(draw++);
    {
      const LatentVector z(rng.normal_vector(m));
      const Image u = shaped(rng.normal_vector(rows * cols), rows, cols);
      const Vector analytic = bundle.generator->vjp(z, u);
      const Vector numeric = central_difference(
          [&](const Vector& x) { return (bundle.generator->forward(LatentVector(x)) * u).sum(); }, z.values);
      record(audits[0], p, relative_error(analytic, numeric));
    }
    {
      const Image img = draw_image(rng, 0.0, audits[1]);
      const Vector u = rng.normal_vector(n_attr);
      const Vector analytic = flat(bundle.regressor->vjp(img, u));
      const Vector numeric = central_difference(
          [&](const Vector& x) { return bundle.regressor->forward(shaped(x, rows, cols)).values.dot(u); },
          flat(img));
      record(audits[1], p, relative_error(analytic, numeric));
    }
    {
      // Alternate between clean renders and noisy ones that activate the
      // range and high-frequency penalties.
      const double noise = p % 2 == 0 ? 0.0 : 0.08;
      const Image img = draw_image(rng, noise, audits[2]);
      const double u = rng.normal();
      const Vector analytic = flat(bundle.discriminator->vjp(img, u));
      const Vector numeric = central_difference(
          [&](const Vector& x) { return u * bundle.discriminator->forward(shaped(x, rows, cols)); }, flat(img));
      record(audits[2], p, relative_error(analytic, numeric));
    }
    {
      const Image img = draw_image(rng, 0.0, audits[3]);
      FeatureMaps u = bundle.features->forward(img);
      for (auto& map : u) map = shaped(rng.normal_vector(map.size()), map.rows(), map.cols());
      const Vector analytic = flat(bundle.features->vjp(img, u));
      const Vector numeric = central_difference(
          [&](const Vector& x) {
            const FeatureMaps f = bundle.features->forward(shaped(x, rows, cols));
            double s = 0.0;
            for (size_t l = 0; l < f.size(); ++l) s += (f[l] * u[l]).sum();
            return s;
          },
          flat(img));
      record(audits[3], p, relative_error(analytic, numeric));
    }
    {
      const Image img = draw_image(rng, 0.0, audits[4]);
      const Vector u = rng.normal_vector(bundle.identity->forward(img).size());
      const Vector analytic = flat(bundle.identity->vjp(img, u));
      const Vector numeric = central_difference(
          [&](const Vector& x) { return bundle.identity->forward(shaped(x, rows, cols)).dot(u); }, flat(img));
      record(audits[4], p, relative_error(analytic, numeric));
    }
  }
  return audits;
}

std::vector<ComponentAudit> audit_losses(int n_points, std::uint64_t seed) {
  if (n_points < 1) throw PreconditionError("audit_losses: n_points must be at least 1");
  std::vector<ComponentAudit> audits{{"reg_loss(standard)"}, {"reg_loss(swapped)"}, {"disc_loss"}, {"content_loss"}};
  for (auto& a : audits) a.n_points = n_points;
  const SeededRng root(seed);
  for (int p = 0; p < n_points; ++p) {
    SeededRng rng = root.substream(static_cast<std::uint64_t>(p));
    const Index n = 1 + p % 5;
    const Vector predicted = rng.uniform_vector(n, 0.02, 0.98);
    const Vector target = rng.uniform_vector(n, 0.0, 1.0);
    const RegMode modes[2] = {RegMode::kStandard, RegMode::kSwapped};
    for (int k = 0; k < 2; ++k) {
      const Vector analytic = reg_loss(predicted, target, modes[k]).grad;
      const Vector numeric = central_difference(
          [&](const Vector& x) { return reg_loss(x, target, modes[k]).value; }, predicted);
      record(audits[static_cast<size_t>(k)], p, relative_error(analytic, numeric));
    }
    {
      Vector score(1);
      score[0] = rng.uniform(0.02, 0.98);
      Vector analytic(1);
      analytic[0] = disc_loss(score[0]).grad;
      const Vector numeric = central_difference([](const Vector& x) { return disc_loss(x[0]).value; }, score);
      record(audits[2], p, relative_error(analytic, numeric));
    }
    {
      FeatureMaps a;
      FeatureMaps b;
      for (Index side : {8, 4, 2}) {
        a.push_back(shaped(rng.normal_vector(side * side), side, side));
        b.push_back(shaped(rng.normal_vector(side * side), side, side));
      }
      const FeatureLoss loss = content_loss(a, b);
      Vector analytic(84);
      Vector x(84);
      Index off = 0;
      for (size_t l = 0; l < a.size(); ++l) {
        analytic.segment(off, a[l].size()) = flat(loss.grad[l]);
        x.segment(off, a[l].size()) = flat(a[l]);
        off += a[l].size();
      }
      const Vector numeric = central_difference(
          [&](const Vector& v) {
            FeatureMaps maps;
            Index o = 0;
            for (const auto& layer : b) {
              maps.push_back(shaped(v.segment(o, layer.size()), layer.rows(), layer.cols()));
              o += layer.size();
            }
            return content_loss(maps, b).value;
          },
          x);
      record(audits[3], p, relative_error(analytic, numeric));
    }
  }
  return audits;
}

std::string format_audit(const std::vector<ComponentAudit>& audits) {
  std::ostringstream os;
  for (const auto& a : audits) {
    char line[160];
    std::snprintf(line, sizeof(line), "  %-24s max relative error %.3e over %d points (%d redrawn)\n",
                  a.name.c_str(), a.max_relative_error, a.n_points, a.redrawn_points);
    os << line;
  }
  return os.str();
}

double FullAudit::max_relative_error() const {
  double worst = 0.0;
  for (const auto& a : models) worst = std::max(worst, a.max_relative_error);
  for (const auto& a : losses) worst = std::max(worst, a.max_relative_error);
  for (const auto& e : end_to_end) worst = std::max(worst, e.report.max_relative_error);
  return worst;
}

FullAudit full_audit(const ModelBundle& bundle, int n_points, std::uint64_t seed, bool toy_kinks) {
  const auto t0 = std::chrono::steady_clock::now();
  FullAudit audit;
  std::function<bool(const Image&)> kink;
  if (toy_kinks) kink = [](const Image& img) { return toy::near_kink(img); };
  audit.models = audit_models(bundle, n_points, seed, kink);
  audit.losses = audit_losses(n_points, seed + 1);

  for (const TransformKind kind : {TransformKind::kGlobalLinear, TransformKind::kLocalLinear, TransformKind::kLocalMlp}) {
    for (const bool normalized : {false, true}) {
      SeededRng rng = SeededRng(seed + 2).substream(static_cast<std::uint64_t>(kind), normalized);
      Normalization norm;
      norm.enabled = normalized;
      const TransformModule T =
          init_transform(kind, bundle.latent_dim(), bundle.num_attributes(), rng, norm);
      TrainConfig cfg;
      cfg.seed = seed + 3;
      std::function<bool(const TrainSample&)> skip;
      if (kink) {
        skip = [&](const TrainSample& s) {
          return kink(bundle.generator->forward(s.z)) ||
                 kink(bundle.generator->forward(apply_edit(s.z, T, s.delta)));
        };
      }
      audit.end_to_end.push_back({kind, normalized, gradient_audit(bundle, T, n_points, cfg, skip)});
    }
  }
  audit.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return audit;
}

std::string format_full_audit(const FullAudit& audit) {
  std::ostringstream os;
  os << "modules\n" << format_audit(audit.models) << "losses\n" << format_audit(audit.losses) << "end-to-end\n";
  for (const auto& e : audit.end_to_end) {
    char line[200];
    std::snprintf(line, sizeof(line),
                  "  %-13s %-10s max relative error %.3e over %d points (%d redrawn), worst term %s\n",
                  std::string(to_string(e.kind)).c_str(), e.normalized ? "normalized" : "raw",
                  e.report.max_relative_error, e.report.n_points, e.report.redrawn_points,
                  e.report.worst_term.c_str());
    os << line;
  }
  char tail[120];
  std::snprintf(tail, sizeof(tail), "max relative error %.3e, %.1f s\n", audit.max_relative_error(), audit.seconds);
  os << tail;
  return os.str();
}

}  // namespace latent_steer
