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

#include "latent_steer/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include "json.hpp"
#include <sstream>

#include "latent_steer/errors.hpp"
#include "latent_steer/io.hpp"

namespace latent_steer {

double identity_similarity(const Image& a, const Image& b, const ModelBundle& bundle) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("identity_similarity: image shapes differ");
  }
  const Vector ea = bundle.identity->forward(a);
  const Vector eb = bundle.identity->forward(b);
  return std::clamp(ea.dot(eb) / (ea.norm() * eb.norm()), -1.0, 1.0);
}

std::optional<Index> BinSpec::locate(double magnitude) const {
  for (Index b = 0; b < num_bins(); ++b) {
    if (magnitude > edges[b] && magnitude <= edges[b + 1]) return b;
  }
  return std::nullopt;
}

std::string BinSpec::label(Index bin) const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "(%g,%g]", edges[bin], edges[bin + 1]);
  return buf;
}

void BinSpec::validate() const {
  if (edges.size() < 2) throw ConfigError("bins.edges", "need at least two edges");
  for (size_t k = 0; k < edges.size(); ++k) {
    if (!std::isfinite(edges[k])) throw ConfigError("bins.edges", "edges must be finite");
    if (k > 0 && !(edges[k] > edges[k - 1])) throw ConfigError("bins.edges", "edges must ascend strictly");
  }
  if (edges.front() < 0.0) throw ConfigError("bins.edges", "edges must be non-negative");
}

const ReportCell& EvalReport::cell(size_t target_set, Index bin) const {
  return cells.at(target_set * static_cast<size_t>(bins.num_bins()) + static_cast<size_t>(bin));
}

std::vector<std::vector<Index>> single_targets(Index num_attributes) {
  std::vector<std::vector<Index>> sets;
  for (Index i = 0; i < num_attributes; ++i) sets.push_back({i});
  return sets;
}

namespace {

struct Accumulator {
  long n = 0;
  double leak = 0.0;
  double id = 0.0;
};

CellStat mean_std(const std::vector<double>& xs) {
  CellStat s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  return s;
}

}  // namespace

EvalReport leakage_report(const Steering& steering, const ModelBundle& bundle,
                          const std::vector<std::vector<Index>>& target_sets, const BinSpec& bins,
                          const LeakageConfig& cfg) {
  bundle.validate();
  bins.validate();
  if (cfg.n_images < 1) throw PreconditionError("leakage_report: n_images must be at least 1");
  if (cfg.repeats < 2) throw PreconditionError("leakage_report: repeats must be at least 2");
  const Index n_attr = bundle.num_attributes();
  for (const auto& targets : target_sets) {
    if (targets.empty()) throw PreconditionError("leakage_report: empty target set");
    for (Index t : targets) {
      if (t < 0 || t >= n_attr) throw PreconditionError("leakage_report: target index out of range");
    }
  }

  EvalReport report;
  report.bins = bins;
  report.attribute_names = bundle.attribute_names;
  report.target_sets = target_sets;
  report.n_images = cfg.n_images;
  report.repeats = cfg.repeats;
  report.delta_schedule =
      "stratified |delta| = 0.05 + 0.9 (j + u) / n_images, random sign, clipped against alpha";

  const Index nb = bins.num_bins();
  const SeededRng root(cfg.seed);
  for (size_t s = 0; s < target_sets.size(); ++s) {
    const auto& targets = target_sets[s];
    std::vector<bool> is_target(static_cast<size_t>(n_attr), false);
    for (Index t : targets) is_target[static_cast<size_t>(t)] = true;
    const Index n_other = n_attr - static_cast<Index>(targets.size());

    std::vector<std::vector<double>> leak_per_repeat(static_cast<size_t>(nb));
    std::vector<std::vector<double>> id_per_repeat(static_cast<size_t>(nb));
    std::vector<long> counts(static_cast<size_t>(nb), 0);
    for (int r = 0; r < cfg.repeats; ++r) {
      SeededRng rng = root.substream(static_cast<std::uint64_t>(r), s);
      std::vector<Accumulator> acc(static_cast<size_t>(nb));
      for (int j = 0; j < cfg.n_images; ++j) {
        const LatentVector z(rng.normal_vector(bundle.latent_dim()));
        const Image original = bundle.generator->forward(z);
        const AttributeVector alpha = bundle.regressor->forward(original);
        Vector eps = Vector::Zero(n_attr);
        for (Index t : targets) {
          const double magnitude = 0.05 + 0.9 * (static_cast<double>(j) + rng.uniform(0.0, 1.0)) /
                                              static_cast<double>(cfg.n_images);
          eps[t] = rng.uniform(0.0, 1.0) < 0.5 ? -magnitude : magnitude;
        }
        const EditDelta delta = clip_delta(alpha, eps);
        const Image edited = bundle.generator->forward(apply_edit(z, steering, delta));
        const Vector change = bundle.regressor->forward(edited).values - alpha.values;

        std::optional<Index> bin;
        bool same_bin = true;
        for (Index t : targets) {
          const auto b = bins.locate(std::abs(change[t]));
          if (!b || (bin && *bin != *b)) {
            same_bin = false;
            break;
          }
          bin = b;
        }
        if (!same_bin || !bin) continue;

        double leak = 0.0;
        for (Index k = 0; k < n_attr; ++k) {
          if (!is_target[static_cast<size_t>(k)]) leak += std::abs(change[k]);
        }
        if (n_other > 0) leak /= static_cast<double>(n_other);
        Accumulator& a = acc[static_cast<size_t>(*bin)];
        ++a.n;
        a.leak += leak;
        a.id += identity_similarity(original, edited, bundle);
      }
      for (Index b = 0; b < nb; ++b) {
        const Accumulator& a = acc[static_cast<size_t>(b)];
        if (a.n == 0) continue;
        counts[static_cast<size_t>(b)] += a.n;
        leak_per_repeat[static_cast<size_t>(b)].push_back(a.leak / static_cast<double>(a.n));
        id_per_repeat[static_cast<size_t>(b)].push_back(a.id / static_cast<double>(a.n));
      }
    }
    for (Index b = 0; b < nb; ++b) {
      ReportCell cell;
      cell.targets = targets;
      cell.bin = b;
      cell.samples = counts[static_cast<size_t>(b)];
      cell.repeats_populated = static_cast<int>(leak_per_repeat[static_cast<size_t>(b)].size());
      cell.missing = cell.repeats_populated < 2;
      if (!cell.missing) {
        cell.leakage = mean_std(leak_per_repeat[static_cast<size_t>(b)]);
        cell.identity = mean_std(id_per_repeat[static_cast<size_t>(b)]);
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

namespace {

std::string target_label(const EvalReport& report, const std::vector<Index>& targets) {
  std::string out;
  for (size_t k = 0; k < targets.size(); ++k) {
    if (k > 0) out += "+";
    const auto t = static_cast<size_t>(targets[k]);
    out += t < report.attribute_names.size() ? report.attribute_names[t] : std::to_string(t);
  }
  return out;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

}  // namespace

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "targets,bin,leakage_mean,leakage_std,identity_mean,identity_std,samples,repeats\n";
  for (const auto& c : report.cells) {
    os << target_label(report, c.targets) << "," << report.bins.label(c.bin) << ",";
    if (c.missing) {
      os << ",,,,";
    } else {
      os << fmt("%.6g", c.leakage.mean) << "," << fmt("%.6g", c.leakage.std) << ","
         << fmt("%.6g", c.identity.mean) << "," << fmt("%.6g", c.identity.std) << ",";
    }
    os << c.samples << "," << c.repeats_populated << "\n";
  }
  return os.str();
}

std::string report_to_text(const EvalReport& report) {
  const Index nb = report.bins.num_bins();
  std::vector<std::string> header{"targets"};
  for (Index b = 0; b < nb; ++b) header.push_back(report.bins.label(b));

  auto table = [&](const char* title, bool leakage) {
    std::vector<std::vector<std::string>> rows{header};
    for (size_t s = 0; s < report.target_sets.size(); ++s) {
      std::vector<std::string> row{target_label(report, report.target_sets[s])};
      for (Index b = 0; b < nb; ++b) {
        const ReportCell& c = report.cell(s, b);
        if (c.missing) {
          row.push_back("-");
        } else {
          const CellStat& st = leakage ? c.leakage : c.identity;
          row.push_back(fmt("%.3f", st.mean) + " +- " + fmt("%.1e", st.std));
        }
      }
      rows.push_back(std::move(row));
    }
    std::vector<size_t> width(header.size(), 0);
    for (const auto& row : rows) {
      for (size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], row[k].size());
    }
    std::ostringstream os;
    os << title << "\n";
    for (const auto& row : rows) {
      for (size_t k = 0; k < row.size(); ++k) {
        os << (k == 0 ? "" : "  ");
        os << row[k] << std::string(width[k] - row[k].size(), ' ');
      }
      os << "\n";
    }
    return os.str();
  };

  std::ostringstream os;
  os << table("Leakage (mean |change| of non-target attributes)", true) << "\n";
  os << table("Identity (cosine to original)", false) << "\n";
  os << "images " << report.n_images << ", repeats " << report.repeats << "; " << report.delta_schedule
     << "\n";
  return os.str();
}

ControllabilityResult controllability(const Steering& steering, const ModelBundle& bundle, int n_probe,
                                      std::uint64_t seed, const std::vector<Index>& targets) {
  bundle.validate();
  if (n_probe < 1) throw PreconditionError("controllability: n_probe must be at least 1");
  const Index n_attr = bundle.num_attributes();
  std::vector<Index> active = targets;
  if (active.empty()) {
    for (Index i = 0; i < n_attr; ++i) active.push_back(i);
  }
  ControllabilityResult result;
  result.n_probe = n_probe;
  result.per_attribute = Vector::Zero(n_attr);
  SeededRng rng(seed);
  for (int p = 0; p < n_probe; ++p) {
    const LatentVector z(rng.normal_vector(bundle.latent_dim()));
    const AttributeVector alpha = bundle.regressor->forward(bundle.generator->forward(z));
    EditDelta delta = EditDelta::zeros(n_attr);
    for (Index t : active) delta.values[t] = rng.uniform(-alpha.values[t], 1.0 - alpha.values[t]);
    const Vector predicted =
        bundle.regressor->forward(bundle.generator->forward(apply_edit(z, steering, delta))).values;
    for (Index t : active) {
      result.per_attribute[t] += std::abs(predicted[t] - (alpha.values[t] + delta.values[t]));
    }
  }
  result.per_attribute /= static_cast<double>(n_probe);
  for (Index t : active) result.mean_abs_error += result.per_attribute[t];
  result.mean_abs_error /= static_cast<double>(active.size());
  return result;
}

SelectionResult select_directions(const DirectionBank& bank, const ModelBundle& bundle,
                                  const SelectionConfig& cfg) {
  bundle.validate();
  if (bank.size() < 1) throw PreconditionError("select_directions: empty candidate bank");
  if (cfg.degrees.empty()) throw PreconditionError("select_directions: no degrees given");
  if (cfg.n_images < 1) throw PreconditionError("select_directions: n_images must be at least 1");
  if (bank.latent_dim() != bundle.latent_dim()) {
    throw DimensionError("select_directions: bank latent dimension does not match the generator");
  }
  const Index n_attr = bundle.num_attributes();
  SelectionResult result;
  result.response = Matrix::Zero(n_attr, bank.size());
  SeededRng rng(cfg.seed);
  for (int img = 0; img < cfg.n_images; ++img) {
    const LatentVector z(rng.normal_vector(bundle.latent_dim()));
    const Vector alpha = bundle.regressor->forward(bundle.generator->forward(z)).values;
    for (Index k = 0; k < bank.size(); ++k) {
      const Vector d = bank.direction(k, z);
      for (double degree : cfg.degrees) {
        const LatentVector moved(z.values + degree * d);
        const Vector a = bundle.regressor->forward(bundle.generator->forward(moved)).values;
        result.response.col(k) += (a - alpha).cwiseAbs();
      }
    }
  }
  result.response /= static_cast<double>(cfg.n_images * static_cast<int>(cfg.degrees.size()));
  for (Index i = 0; i < n_attr; ++i) {
    Index best = 0;
    for (Index k = 1; k < bank.size(); ++k) {
      if (result.response(i, k) > result.response(i, best)) best = k;
    }
    result.chosen.push_back(best);
  }
  return result;
}

PairStudy emit_pair_study(const Steering& steering, const ModelBundle& bundle, Index attribute,
                          const std::vector<LatentVector>& latents, const std::filesystem::path& out_dir) {
  bundle.validate();
  if (latents.empty()) throw PreconditionError("emit_pair_study: n_pairs must be at least 1");
  const Index n_attr = bundle.num_attributes();
  if (attribute < 0 || attribute >= n_attr) {
    throw PreconditionError("emit_pair_study: attribute index out of range");
  }
  PairStudy study;
  study.attribute = attribute;
  study.attribute_name = static_cast<size_t>(attribute) < bundle.attribute_names.size()
                             ? bundle.attribute_names[static_cast<size_t>(attribute)]
                             : std::to_string(attribute);
  nlohmann::json manifest;
  manifest["attribute"] = attribute;
  manifest["attribute_name"] = study.attribute_name;
  manifest["degree"] = study.degree;
  manifest["pairs"] = nlohmann::json::array();
  manifest["files"] = nlohmann::json::array();

  for (size_t p = 0; p < latents.size(); ++p) {
    PairEntry e;
    e.index = static_cast<int>(p);
    e.z = latents[p];
    const AttributeVector alpha = bundle.regressor->forward(bundle.generator->forward(e.z));
    e.alpha = alpha.values[attribute];
    auto edit = [&](double sign, double& realized, double& predicted, std::string& file, const char* tag) {
      Vector eps = Vector::Zero(n_attr);
      eps[attribute] = sign * study.degree;
      const EditDelta delta = clip_delta(alpha, eps);
      realized = delta.values[attribute];
      const Image img = bundle.generator->forward(apply_edit(e.z, steering, delta));
      predicted = bundle.regressor->forward(img).values[attribute];
      char name[64];
      std::snprintf(name, sizeof(name), "pair_%03zu_%s.png", p, tag);
      file = name;
      write_png(out_dir / file, img);
    };
    edit(+1.0, e.delta_plus, e.predicted_plus, e.file_plus, "plus");
    edit(-1.0, e.delta_minus, e.predicted_minus, e.file_minus, "minus");
    manifest["pairs"].push_back({{"index", e.index},
                                 {"alpha", e.alpha},
                                 {"delta_plus", e.delta_plus},
                                 {"delta_minus", e.delta_minus},
                                 {"predicted_plus", e.predicted_plus},
                                 {"predicted_minus", e.predicted_minus},
                                 {"plus", e.file_plus},
                                 {"minus", e.file_minus}});
    manifest["files"].push_back(e.file_plus);
    manifest["files"].push_back(e.file_minus);
    study.pairs.push_back(std::move(e));
  }
  study.manifest = out_dir / "manifest.json";
  write_file_atomic(study.manifest, manifest.dump(2) + "\n");
  return study;
}

PairStudy emit_pair_study(const Steering& steering, const ModelBundle& bundle, Index attribute,
                          int n_pairs, std::uint64_t seed, const std::filesystem::path& out_dir) {
  if (n_pairs < 1) throw PreconditionError("emit_pair_study: n_pairs must be at least 1");
  SeededRng rng(seed);
  std::vector<LatentVector> latents;
  for (int p = 0; p < n_pairs; ++p) latents.emplace_back(rng.normal_vector(bundle.latent_dim()));
  return emit_pair_study(steering, bundle, attribute, latents, out_dir);
}

}  // namespace latent_steer
