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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <numeric>
#include <string>
#include <vector>

#include "latent_steer/checkpoint.hpp"
#include "latent_steer/config.hpp"
#include "latent_steer/edit_service.hpp"
#include "latent_steer/evaluation.hpp"
#include "latent_steer/gradcheck.hpp"
#include "latent_steer/inversion.hpp"
#include "latent_steer/losses.hpp"
#include "latent_steer/pipeline.hpp"
#include "latent_steer/toy_world.hpp"

namespace ls = latent_steer;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void verdict(int id, bool pass, const std::string& name, const std::string& detail) {
  std::printf("criterion %2d %s  %s: %s\n", id, pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void info(const std::string& line) {
  std::printf("             info  %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, a);
  return buf;
}

struct TrainedRun {
  ls::TransformModule transform;
  ls::AdamState optimizer;
  ls::TrainRecord record;
  double seconds = 0.0;
};

TrainedRun train_run(const ls::RunConfig& cfg, const ls::ModelBundle& bundle) {
  const auto t0 = Clock::now();
  ls::TrainResult r = ls::train(ls::initial_transform(cfg, bundle), bundle, cfg.train);
  return {std::move(r.transform), std::move(r.optimizer), std::move(r.record), seconds_since(t0)};
}

ls::EvalReport single_leakage(const ls::Steering& steering, const ls::ModelBundle& bundle, const ls::RunConfig& cfg) {
  ls::LeakageConfig lc;
  lc.n_images = cfg.eval.n_images;
  lc.repeats = cfg.eval.repeats;
  lc.seed = ls::leakage_seed(cfg.seed());
  return ls::leakage_report(steering, bundle, ls::single_targets(bundle.num_attributes()), cfg.bins, lc);
}

// Largest populated leakage cell, with its location.
struct WorstCell {
  double value = 0.0;
  std::string where;
  int missing = 0;
};

WorstCell worst_leakage(const ls::EvalReport& report) {
  WorstCell w;
  for (const auto& c : report.cells) {
    if (c.missing) {
      ++w.missing;
      continue;
    }
    if (c.leakage.mean >= w.value) {
      w.value = c.leakage.mean;
      w.where = report.attribute_names[static_cast<size_t>(c.targets.front())] + " " + report.bins.label(c.bin);
    }
  }
  return w;
}

// ---------------------------------------------------------------- criteria

void gradient_audit(const ls::ModelBundle& bundle) {
  const ls::FullAudit audit = ls::full_audit(bundle, 100, 0);
  const double err = audit.max_relative_error();
  const bool pass = err <= 1e-4 && audit.seconds < 120.0;
  verdict(1, pass, "gradient audit",
          "max relative error " + fmt("%.2e", err) + " (<= 1e-04) over " + std::to_string(audit.models.size()) +
              " modules, " + std::to_string(audit.losses.size()) + " loss terms, " +
              std::to_string(audit.end_to_end.size()) + " end-to-end configurations at 100 points; " +
              fmt("%.1f s", audit.seconds) + " (< 120 s)");
}

void sampling_invariants() {
  ls::SeededRng rng(2024);
  long clipped = 0, violations = 0, mismatches = 0;
  constexpr int kDraws = 100000;
  for (int k = 0; k < kDraws; ++k) {
    const ls::AttributeVector alpha(rng.uniform_vector(3, 0.0, 1.0));
    const ls::EpsilonSample s = ls::sample_epsilon(alpha, rng);
    bool unclipped = true;
    for (ls::Index i = 0; i < 3; ++i) {
      const double target = alpha.values[i] + s.delta.values[i];
      if (!(target >= 0.0 && target <= 1.0)) ++violations;
      const double raw = alpha.values[i] + s.epsilon[i];
      if (raw < 0.0 || raw > 1.0) unclipped = false;
    }
    if (unclipped) {
      for (ls::Index i = 0; i < 3; ++i) {
        if (std::bit_cast<std::uint64_t>(s.delta.values[i]) != std::bit_cast<std::uint64_t>(s.epsilon[i])) ++mismatches;
      }
    } else {
      ++clipped;
    }
  }
  verdict(2, violations == 0 && mismatches == 0, "sampling invariants",
          std::to_string(kDraws) + " draws, " + std::to_string(violations) + " targets outside [0,1], " +
              std::to_string(mismatches) + " unclipped components with delta != epsilon bitwise (" +
              std::to_string(clipped) + " draws clipped)");
}

void controllability(const ls::ModelBundle& bundle, const ls::RunConfig& cfg, const TrainedRun& run) {
  const auto t0 = Clock::now();
  const std::uint64_t seed = ls::probe_seed(cfg.seed());
  const ls::ControllabilityResult trained = ls::controllability(run.transform, bundle, cfg.eval.probe, seed);
  const ls::toy::OracleSteering oracle;
  const ls::ControllabilityResult orc = ls::controllability(oracle, bundle, cfg.eval.probe, seed);
  const double runtime = run.seconds + seconds_since(t0);
  const bool pass = trained.mean_abs_error <= 0.05 && orc.mean_abs_error <= 0.01 && runtime < 300.0;
  verdict(3, pass, "controllability",
          "trained " + fmt("%.4f", trained.mean_abs_error) + " (<= 0.05), oracle " + fmt("%.4f", orc.mean_abs_error) +
              " (<= 0.01) on " + std::to_string(cfg.eval.probe) + " probes; train+probe " + fmt("%.1f s", runtime) +
              " (< 300 s)");
  info("trained per attribute: background " + fmt("%.4f", trained.per_attribute[0]) + ", size " +
       fmt("%.4f", trained.per_attribute[1]) + ", disk " + fmt("%.4f", trained.per_attribute[2]));
  const ls::ControllabilityResult big = ls::controllability(oracle, bundle, 20000, seed);
  info("oracle on 20000 probes: " + fmt("%.4f", big.mean_abs_error) + " (size read-out " +
       fmt("%.4f", big.per_attribute[1]) + ")");
}

void disentanglement(const ls::ModelBundle& bundle, const ls::RunConfig& cfg, const TrainedRun& run) {
  const WorstCell trained = worst_leakage(single_leakage(run.transform, bundle, cfg));
  const ls::toy::OracleSteering oracle;
  const WorstCell orc = worst_leakage(single_leakage(oracle, bundle, cfg));
  const bool pass = trained.value <= 0.05 && orc.value <= 0.02 && trained.missing == 0 && orc.missing == 0;
  verdict(4, pass, "disentanglement",
          "worst trained leakage " + fmt("%.4f", trained.value) + " at " + trained.where + " (<= 0.05), worst oracle " +
              fmt("%.4f", orc.value) + " at " + orc.where + " (<= 0.02); missing cells " +
              std::to_string(trained.missing + orc.missing));
}

void identity(const ls::ModelBundle& bundle, const ls::RunConfig& cfg, const TrainedRun& run) {
  const ls::EvalReport report = single_leakage(run.transform, bundle, cfg);
  bool pass = true;
  std::string detail;
  for (size_t t = 0; t < report.target_sets.size(); ++t) {
    std::vector<double> means;
    for (ls::Index b = 0; b < report.bins.num_bins(); ++b) {
      const ls::ReportCell& c = report.cell(t, b);
      if (c.missing) pass = false;
      means.push_back(c.identity.mean);
    }
    const bool first_ok = means.front() >= 0.98;
    const bool monotone = std::is_sorted(means.rbegin(), means.rend());
    pass = pass && first_ok && monotone;
    detail += (t ? "; " : "") + report.attribute_names[t] + " ";
    for (size_t b = 0; b < means.size(); ++b) detail += (b ? " >= " : "") + fmt("%.6f", means[b]);
    if (!monotone) detail += " (rises)";
  }
  verdict(5, pass, "identity preservation", "bin means " + detail + "; first bin >= 0.98, non-increasing");
}

void joint_vs_single(const ls::ModelBundle& bundle, const ls::RunConfig& cfg, const TrainedRun& joint) {
  const ls::EvalReport joint_report = single_leakage(joint.transform, bundle, cfg);
  const ls::Index last = cfg.bins.num_bins() - 1;
  bool pass = true;
  std::string detail;
  for (ls::Index i = 0; i < bundle.num_attributes(); ++i) {
    ls::RunConfig single = cfg;
    single.train.sampling = ls::SamplingMode::single(i);
    const TrainedRun run = train_run(single, bundle);
    const ls::EvalReport single_report = single_leakage(run.transform, bundle, cfg);
    const ls::ReportCell& j = joint_report.cell(static_cast<size_t>(i), last);
    const ls::ReportCell& s = single_report.cell(static_cast<size_t>(i), last);
    const bool ok = !j.missing && !s.missing && j.leakage.mean <= s.leakage.mean + 0.02;
    pass = pass && ok;
    detail += (i ? "; " : "") + bundle.attribute_names[static_cast<size_t>(i)] + " joint " + fmt("%.4f", j.leakage.mean) +
              " vs single " + fmt("%.4f", s.leakage.mean);
  }
  verdict(6, pass, "joint vs single", "leakage in " + cfg.bins.label(last) + ": " + detail + " (joint <= single + 0.02)");
}

void inversion(const ls::ModelBundle& bundle) {
  int within = 0, ordered = 0, monotone = 0;
  double worst_mse = 0.0;
  constexpr int kImages = 20;
  for (int k = 0; k < kImages; ++k) {
    ls::SeededRng rng(7000 + static_cast<std::uint64_t>(k));
    const ls::Image target = bundle.generator->forward(ls::LatentVector(rng.normal_vector(bundle.latent_dim())));
    ls::InversionConfig short_budget;
    short_budget.steps = 500;
    ls::InversionConfig long_budget = short_budget;
    long_budget.steps = 4000;
    const ls::InversionResult a = ls::invert(target, bundle, short_budget);
    const ls::InversionResult b = ls::invert(target, bundle, long_budget);
    worst_mse = std::max(worst_mse, a.mse);
    within += a.mse <= 1e-3;
    ordered += b.mse <= a.mse;
    const auto non_increasing = [](const std::vector<double>& t) {
      return std::adjacent_find(t.begin(), t.end(), [](double x, double y) { return y > x; }) == t.end();
    };
    monotone += non_increasing(a.trace) && non_increasing(b.trace);
  }
  verdict(7, within == kImages && ordered == kImages && monotone == kImages, "inversion",
          std::to_string(within) + "/20 reach MSE <= 1e-3 in 500 steps (worst " + fmt("%.2e", worst_mse) + "), " +
              std::to_string(ordered) + "/20 with 4000-step MSE <= 500-step MSE, " + std::to_string(monotone) +
              "/20 with non-increasing traces");
}

void direction_selection(const ls::ModelBundle& bundle, std::uint64_t run_seed) {
  int recovered = 0;
  constexpr int kTrials = 20;
  const ls::Index m = bundle.latent_dim();
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::uint64_t seed = ls::selection_seed(run_seed) + static_cast<std::uint64_t>(trial);
    ls::SeededRng rng(seed);
    // Columns 0..2 are the oracle axes, 3..7 random unit vectors; then shuffle.
    ls::Matrix bank = ls::Matrix::Zero(m, 8);
    for (ls::Index i = 0; i < 3; ++i) bank(i, i) = 1.0;
    for (ls::Index k = 3; k < 8; ++k) bank.col(k) = rng.normal_vector(m).normalized();
    std::vector<ls::Index> order(8);
    std::iota(order.begin(), order.end(), 0);
    for (ls::Index k = 7; k > 0; --k) {
      const auto j = std::min(k, static_cast<ls::Index>(rng.uniform(0.0, static_cast<double>(k + 1))));
      std::swap(order[static_cast<size_t>(k)], order[static_cast<size_t>(j)]);
    }
    ls::Matrix shuffled(m, 8);
    for (ls::Index k = 0; k < 8; ++k) shuffled.col(k) = bank.col(order[static_cast<size_t>(k)]);
    ls::SelectionConfig sc;
    sc.seed = seed;
    const ls::SelectionResult r = ls::select_directions(ls::MatrixDirectionBank(shuffled), bundle, sc);
    bool all = true;
    for (ls::Index i = 0; i < 3; ++i) all = all && order[static_cast<size_t>(r.chosen[static_cast<size_t>(i)])] == i;
    recovered += all;
  }
  verdict(8, recovered == kTrials, "direction selection",
          std::to_string(recovered) + "/20 trials recover all 3 oracle axes from 3 oracle + 5 random candidates");
}

void loss_spot_values() {
  ls::Vector p(1), t(1);
  p << 0.9;
  t << 0.9;
  const double reg = ls::reg_loss(p, t).value;
  const double disc = ls::disc_loss(0.5).value;
  const double total = ls::total_loss(0.32508, -0.69315, 0.0, ls::LossWeights{}).total;
  const bool pass = std::abs(reg - 0.32508) <= 1e-5 && std::abs(disc + 0.69315) <= 1e-5 && std::abs(total - 3.21614) <= 1e-4;
  verdict(9, pass, "loss spot values",
          "reg(0.9,0.9) " + fmt("%.6f", reg) + ", disc(0.5) " + fmt("%.6f", disc) + ", total " + fmt("%.6f", total));
}

void determinism(const ls::ModelBundle& bundle, const ls::RunConfig& cfg, const TrainedRun& run) {
  const TrainedRun again = train_run(cfg, bundle);
  bool logs_equal = again.record.losses.size() == run.record.losses.size();
  for (size_t k = 0; logs_equal && k < run.record.losses.size(); ++k) {
    const auto& a = run.record.losses[k];
    const auto& b = again.record.losses[k];
    logs_equal = std::bit_cast<std::uint64_t>(a.reg) == std::bit_cast<std::uint64_t>(b.reg) &&
                 std::bit_cast<std::uint64_t>(a.disc) == std::bit_cast<std::uint64_t>(b.disc) &&
                 std::bit_cast<std::uint64_t>(a.content) == std::bit_cast<std::uint64_t>(b.content) &&
                 std::bit_cast<std::uint64_t>(a.total) == std::bit_cast<std::uint64_t>(b.total);
  }

  const ls::Checkpoint ckpt = ls::make_checkpoint(run.transform, run.optimizer, cfg.train.iterations, cfg, bundle);
  const ls::Checkpoint back = ls::parse_checkpoint(ls::serialize_checkpoint(ckpt));
  const auto steer_a = ls::make_steering(ckpt, bundle);
  const auto steer_b = ls::make_steering(back, bundle);
  bool round_trip = ls::serialize_checkpoint(back) == ls::serialize_checkpoint(ckpt);
  ls::SeededRng rng(4242);
  for (int k = 0; round_trip && k < 100; ++k) {
    const ls::LatentVector z(rng.normal_vector(bundle.latent_dim()));
    const ls::EditDelta d(rng.uniform_vector(bundle.num_attributes(), -1.0, 1.0));
    round_trip = steer_a->displacement(z, d) == steer_b->displacement(z, d);
  }

  ls::EditService service;
  service.load(ckpt);
  const ls::SessionState s = service.create_from_seed(17);
  ls::SeededRng edits(99);
  for (int k = 0; k < 25; ++k) {
    ls::EditRequest req;
    for (ls::Index i = 0; i < bundle.num_attributes(); ++i) req.delta.emplace_back(i, edits.uniform(-0.3, 0.3));
    service.edit(s.id, req);
  }
  const ls::SessionState now = service.session(s.id);
  const ls::Image live = service.render(s.id);
  const ls::Image replayed = service.render_latent(service.replay(now));
  const bool replay_equal = (live.array() == replayed.array()).all();

  verdict(10, logs_equal && round_trip && replay_equal, "determinism and persistence",
          std::string("loss logs ") + (logs_equal ? "bitwise equal" : "differ") + " over " +
              std::to_string(run.record.losses.size()) + " iterations, checkpoint round trip " +
              (round_trip ? "bitwise" : "differs") + ", session replay of 25 edits " +
              (replay_equal ? "bitwise" : "differs"));
}

void seed_survey(const ls::ModelBundle& bundle, const ls::RunConfig& base) {
  info("seed survey (not scored): controllability / worst leakage per run seed");
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    ls::RunConfig cfg = base;
    cfg.set_seed(seed);
    const TrainedRun run = train_run(cfg, bundle);
    const double c = ls::controllability(run.transform, bundle, cfg.eval.probe, ls::probe_seed(seed)).mean_abs_error;
    const WorstCell w = worst_leakage(single_leakage(run.transform, bundle, cfg));
    info("  seed " + std::to_string(seed) + ": " + fmt("%.4f", c) + " / " + fmt("%.4f", w.value) + " (" + w.where + ")");
  }
}

}  // namespace

int run_all() {
  const auto t0 = Clock::now();
  const ls::RunConfig cfg;  // toy defaults: global-linear, joint, M=2000, batch 4, seed 0
  const ls::ModelBundle bundle = ls::make_world(cfg.world);

  gradient_audit(bundle);
  sampling_invariants();
  const TrainedRun run = train_run(cfg, bundle);
  controllability(bundle, cfg, run);
  disentanglement(bundle, cfg, run);
  identity(bundle, cfg, run);
  joint_vs_single(bundle, cfg, run);
  inversion(bundle);
  direction_selection(bundle, cfg.seed());
  loss_spot_values();
  determinism(bundle, cfg, run);
  seed_survey(bundle, cfg);

  std::printf("%d of 10 criteria failed; %.1f s\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}

int main() {
  try {
    return run_all();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
}
