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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "latent_steer/latent_core.hpp"
#include "latent_steer/models.hpp"

namespace latent_steer {

// Cosine of the identity embeddings of two images.
double identity_similarity(const Image& a, const Image& b, const ModelBundle& bundle);

// Half-open magnitude bins (lo, hi] over |eps_hat|.
struct BinSpec {
  std::vector<double> edges{0.0, 0.3, 0.6, 0.9};

  Index num_bins() const { return static_cast<Index>(edges.size()) - 1; }
  // Bin index containing `magnitude`, or nullopt when it lies in none.
  std::optional<Index> locate(double magnitude) const;
  std::string label(Index bin) const;
  // Throws ConfigError unless edges are finite, ascending and at least two.
  void validate() const;
};

struct CellStat {
  double mean = 0.0;
  double std = 0.0;
};

struct ReportCell {
  std::vector<Index> targets;
  Index bin = 0;
  bool missing = true;
  CellStat leakage;   // mean |change| on non-target attributes
  CellStat identity;  // cosine between original and edited image
  long samples = 0;   // summed over repeats
  int repeats_populated = 0;
};

struct EvalReport {
  BinSpec bins;
  std::vector<std::string> attribute_names;
  std::vector<std::vector<Index>> target_sets;
  std::vector<ReportCell> cells;  // target-set major, bin minor
  int n_images = 0;
  int repeats = 0;
  std::string delta_schedule;

  const ReportCell& cell(size_t target_set, Index bin) const;
};

struct LeakageConfig {
  int n_images = 200;
  int repeats = 3;
  std::uint64_t seed = 0;
};

// For every source latent and requested delta on the targets, measures
// eps_hat = R(edited) - R(original) on the targets and bins the sample by
// |eps_hat| (all targets must share one bin). Requested magnitudes are
// stratified over (0.05, 0.95) with random signs and clipped against alpha.
EvalReport leakage_report(const Steering& steering, const ModelBundle& bundle,
                          const std::vector<std::vector<Index>>& target_sets, const BinSpec& bins,
                          const LeakageConfig& cfg);

// Every single-attribute target set {0}, {1}, ..., {N-1}.
std::vector<std::vector<Index>> single_targets(Index num_attributes);

std::string report_to_csv(const EvalReport& report);
std::string report_to_text(const EvalReport& report);

struct ControllabilityResult {
  double mean_abs_error = 0.0;
  Vector per_attribute;
  int n_probe = 0;
};

// Held-out probe of edit accuracy: z ~ N(0, I), alpha = R(G(z)), delta drawn
// uniformly from the feasible box [-alpha, 1 - alpha] on the targets (zero
// elsewhere), score mean |R(G(z + T delta)) - (alpha + delta)| on the targets.
ControllabilityResult controllability(const Steering& steering, const ModelBundle& bundle, int n_probe,
                                      std::uint64_t seed, const std::vector<Index>& targets = {});

// Candidate directions, either fixed vectors or fields of z.
class DirectionBank {
 public:
  virtual ~DirectionBank() = default;
  virtual Index size() const = 0;
  virtual Index latent_dim() const = 0;
  virtual Vector direction(Index candidate, const LatentVector& z) const = 0;
};

class MatrixDirectionBank final : public DirectionBank {
 public:
  // One candidate per column.
  explicit MatrixDirectionBank(Matrix candidates) : candidates_(std::move(candidates)) {}
  Index size() const override { return candidates_.cols(); }
  Index latent_dim() const override { return candidates_.rows(); }
  Vector direction(Index candidate, const LatentVector&) const override {
    return candidates_.col(candidate);
  }

 private:
  Matrix candidates_;
};

struct SelectionConfig {
  int n_images = 100;
  std::vector<double> degrees{-1.0, -0.5, 0.5, 1.0};
  std::uint64_t seed = 0;
};

struct SelectionResult {
  std::vector<Index> chosen;  // per attribute
  Matrix response;            // attributes x candidates, mean |change|
};

// Picks, per attribute, the candidate with the largest mean absolute regressor
// response. Ties go to the lowest candidate index.
SelectionResult select_directions(const DirectionBank& bank, const ModelBundle& bundle,
                                  const SelectionConfig& cfg);

struct PairEntry {
  int index = 0;
  LatentVector z;
  double alpha = 0.0;
  double delta_plus = 0.0;
  double delta_minus = 0.0;
  double predicted_plus = 0.0;
  double predicted_minus = 0.0;
  std::string file_plus;
  std::string file_minus;
};

struct PairStudy {
  Index attribute = 0;
  std::string attribute_name;
  double degree = 0.4;
  std::vector<PairEntry> pairs;
  std::filesystem::path manifest;
};

// Edits each latent by +0.4 and -0.4 on `attribute` (clipped), writes the
// pairs as PNGs under `out_dir` plus manifest.json. Throws PreconditionError
// when no latents are given.
PairStudy emit_pair_study(const Steering& steering, const ModelBundle& bundle, Index attribute,
                          const std::vector<LatentVector>& latents, const std::filesystem::path& out_dir);

// Draws n_pairs latents from N(0, I) with `seed`.
PairStudy emit_pair_study(const Steering& steering, const ModelBundle& bundle, Index attribute,
                          int n_pairs, std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace latent_steer
