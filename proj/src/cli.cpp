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

#include "latent_steer/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "latent_steer/checkpoint.hpp"
#include "latent_steer/config.hpp"
#include "latent_steer/evaluation.hpp"
#include "latent_steer/gradcheck.hpp"
#include "latent_steer/http_api.hpp"
#include "latent_steer/io.hpp"
#include "latent_steer/pipeline.hpp"

namespace latent_steer {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

Json to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json named(const std::vector<std::string>& names, const Vector& v) {
  Json j = Json::object();
  for (Index i = 0; i < v.size(); ++i) j[names[static_cast<size_t>(i)]] = v[i];
  return j;
}

void write_json(const fs::path& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

void ensure_dir(const fs::path& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

Index resolve_attribute(const std::vector<std::string>& names, const std::string& key) {
  for (size_t k = 0; k < names.size(); ++k) {
    if (names[k] == key) return static_cast<Index>(k);
  }
  if (!key.empty() && key.size() < 10 && key.find_first_not_of("0123456789") == std::string::npos) {
    const long i = std::stol(key);
    if (i < static_cast<long>(names.size())) return i;
  }
  throw ConfigError("delta", "unknown attribute '" + key + "'");
}

// "background=+0.3,size=-0.2" -> dense vector over the attributes.
Vector parse_delta(const std::string& spec, const std::vector<std::string>& names) {
  Vector delta = Vector::Zero(static_cast<Index>(names.size()));
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("delta", "expected name=value, got '" + item + "'");
    const std::string value = item.substr(eq + 1);
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || *end != '\0' || !std::isfinite(v)) {
      throw ConfigError("delta", "'" + value + "' is not a finite number");
    }
    delta[resolve_attribute(names, item.substr(0, eq))] = v;
  }
  return delta;
}

struct LoadedModel {
  Checkpoint checkpoint;
  ModelBundle bundle;
  std::shared_ptr<const Steering> steering;
};

LoadedModel load_model(const std::string& path) {
  LoadedModel m{load_checkpoint(path), {}, {}};
  m.bundle = make_world(m.checkpoint.config.world);
  m.steering = make_steering(m.checkpoint, m.bundle);
  return m;
}

RunConfig load_config_or_default(const std::string& path) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
  apply_seed_override(cfg);
  return cfg;
}

std::string checkpoint_name(long iteration) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ckpt_%08ld.json", iteration);
  return buf;
}

std::string log_row(long iteration, const LossBreakdown& l) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%.17g\n", iteration, l.reg, l.disc, l.content, l.total);
  return buf;
}

constexpr const char* kLogHeader = "iteration,reg,disc,content,total\n";

// Rows of an existing log up to and including `last_iteration`.
std::string log_prefix(const fs::path& path, long last_iteration) {
  std::string out = kLogHeader;
  if (!fs::exists(path)) return out;
  std::stringstream ss(read_file(path));
  std::string line;
  std::getline(ss, line);
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    if (std::stol(line.substr(0, line.find(','))) > last_iteration) break;
    out += line + "\n";
  }
  return out;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config;
  std::string resume;
  std::string checkpoint_dir;
  std::string log;
  long log_every = 100;
  bool oracle = false;
  bool quiet = false;
};

int cmd_train(const TrainArgs& args, std::ostream& out) {
  RunConfig cfg;
  std::optional<Checkpoint> resumed;
  if (!args.resume.empty()) {
    resumed = load_checkpoint(args.resume);
    if (resumed->kind != CheckpointKind::kTransform || !resumed->optimizer) {
      throw ConfigError("checkpoint.kind", "only trained transform checkpoints can be resumed");
    }
    cfg = resumed->config;
  } else {
    cfg = load_config_or_default(args.config);
  }
  const ModelBundle bundle = make_world(cfg.world);
  cfg.train.validate(bundle.num_attributes());

  const fs::path dir = args.checkpoint_dir.empty() ? fs::path(cfg.paths.checkpoint_dir) : fs::path(args.checkpoint_dir);
  ensure_dir(dir);

  if (args.oracle) {
    if (cfg.world != "toy") throw ConfigError("world", "the oracle checkpoint exists only for the toy world");
    save_checkpoint(dir / "final.json", make_oracle_checkpoint(cfg, bundle));
    out << "wrote " << (dir / "final.json").string() << "\n";
    return kExitOk;
  }

  const fs::path log_path = args.log.empty() ? dir / "loss_log.csv" : fs::path(args.log);
  if (log_path.has_parent_path()) ensure_dir(log_path.parent_path());
  const long start = resumed ? resumed->iteration : 0;
  std::string log = resumed ? log_prefix(log_path, start) : std::string(kLogHeader);

  TransformModule T = resumed ? *resumed->transform : initial_transform(cfg, bundle);
  AdamState optimizer = resumed ? *resumed->optimizer : AdamState(T.params().size());

  TrainHooks hooks;
  hooks.on_step = [&](long it, const LossBreakdown& l) {
    const long done = it + 1;
    log += log_row(done, l);
    if (!args.quiet && (done == 1 || done % args.log_every == 0 || done == cfg.train.iterations)) {
      out << "iter=" << done << " reg=" << fmt("%.6f", l.reg) << " disc=" << fmt("%.6f", l.disc)
          << " content=" << fmt("%.6f", l.content) << " total=" << fmt("%.6f", l.total) << "\n";
    }
  };
  hooks.on_checkpoint = [&](const TransformModule& t, const AdamState& opt, long done) {
    const fs::path path = dir / checkpoint_name(done);
    save_checkpoint(path, make_checkpoint(t, opt, done, cfg, bundle));
    write_file_atomic(log_path, log);
    return path.string();
  };
  const TrainResult result = train(std::move(T), bundle, cfg.train, hooks, std::move(optimizer), start);
  const long done = std::max(start, cfg.train.iterations);
  save_checkpoint(dir / "final.json", make_checkpoint(result.transform, result.optimizer, done, cfg, bundle));
  write_file_atomic(log_path, log);
  out << "wrote " << (dir / "final.json").string() << " and " << log_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::string out_dir;
  std::string targets = "single";
  int n_images = 0;
  int repeats = 0;
  int probe = 0;
  std::string pair_attribute;
  int pairs = 20;
};

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  const LoadedModel m = load_model(args.checkpoint);
  RunConfig cfg = m.checkpoint.config;
  apply_seed_override(cfg);
  if (args.n_images > 0) cfg.eval.n_images = args.n_images;
  if (args.repeats > 0) cfg.eval.repeats = args.repeats;
  if (args.probe > 0) cfg.eval.probe = args.probe;

  const Index n = m.bundle.num_attributes();
  std::vector<std::vector<Index>> target_sets = single_targets(n);
  if (args.targets == "all") {
    std::vector<Index> every(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) every[static_cast<size_t>(i)] = i;
    target_sets.push_back(every);
  } else if (args.targets != "single") {
    throw ConfigError("targets", "must be 'single' or 'all'");
  }

  const fs::path dir = args.out_dir.empty() ? fs::path(cfg.paths.report_dir) : fs::path(args.out_dir);
  ensure_dir(dir);

  LeakageConfig lc{cfg.eval.n_images, cfg.eval.repeats, leakage_seed(cfg.seed())};
  const EvalReport report = leakage_report(*m.steering, m.bundle, target_sets, cfg.bins, lc);
  const ControllabilityResult ctrl = controllability(*m.steering, m.bundle, cfg.eval.probe, probe_seed(cfg.seed()));

  write_file_atomic(dir / "leakage.csv", report_to_csv(report));
  write_file_atomic(dir / "leakage.txt", report_to_text(report));
  double max_leakage = 0.0;
  for (const auto& c : report.cells) {
    if (!c.missing) max_leakage = std::max(max_leakage, c.leakage.mean);
  }
  Json summary = {{"controllability", {{"mean_abs_error", ctrl.mean_abs_error},
                                       {"per_attribute", named(m.bundle.attribute_names, ctrl.per_attribute)},
                                       {"n_probe", ctrl.n_probe}}},
                  {"max_leakage", max_leakage},
                  {"n_images", report.n_images},
                  {"repeats", report.repeats},
                  {"delta_schedule", report.delta_schedule}};
  if (!args.pair_attribute.empty()) {
    const Index a = resolve_attribute(m.bundle.attribute_names, args.pair_attribute);
    const PairStudy study = emit_pair_study(*m.steering, m.bundle, a, args.pairs, selection_seed(cfg.seed()),
                                            dir / ("pairs_" + m.bundle.attribute_names[static_cast<size_t>(a)]));
    summary["pair_study"] = study.manifest.string();
  }
  write_json(dir / "summary.json", summary);

  out << report_to_text(report);
  out << "controllability mean |error| " << fmt("%.4f", ctrl.mean_abs_error) << " over " << ctrl.n_probe
      << " probes\n";
  out << "wrote " << dir.string() << "/{leakage.csv,leakage.txt,summary.json}\n";
  return kExitOk;
}

// ---------------------------------------------------------------- edit

struct EditArgs {
  std::string checkpoint;
  std::optional<std::uint64_t> z_seed;
  std::string image;
  std::string delta;
  std::string mode = "relative";
  std::string out_dir = ".";
  int inversion_steps = 0;
};

int cmd_edit(const EditArgs& args, std::ostream& out) {
  if (args.z_seed.has_value() == !args.image.empty()) {
    throw ConfigError("source", "give exactly one of --z-seed or --image");
  }
  const LoadedModel m = load_model(args.checkpoint);
  const auto& names = m.bundle.attribute_names;
  const Vector requested = parse_delta(args.delta, names);
  if (args.mode != "relative" && args.mode != "absolute-target") {
    throw ConfigError("mode", "must be 'relative' or 'absolute-target'");
  }

  LatentVector z;
  Json source;
  if (args.z_seed) {
    SeededRng rng(*args.z_seed);
    z = LatentVector(rng.normal_vector(m.bundle.latent_dim()));
    source = {{"z_seed", *args.z_seed}};
  } else {
    InversionConfig inv = m.checkpoint.config.inversion;
    if (args.inversion_steps > 0) inv.steps = args.inversion_steps;
    const InversionResult r = invert(read_png(args.image), m.bundle, inv);
    z = r.z;
    source = {{"image", args.image}, {"inversion_mse", r.mse}};
  }

  const Image original = m.bundle.generator->forward(z);
  const AttributeVector alpha = m.bundle.regressor->forward(original);
  Vector eps = requested;
  if (args.mode == "absolute-target") {
    // Only attributes named in --delta are targeted; the rest stay put.
    eps = Vector::Zero(requested.size());
    std::stringstream ss(args.delta);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const Index i = resolve_attribute(names, item.substr(0, item.find('=')));
      eps[i] = requested[i] - alpha.values[i];
    }
  }
  const EditDelta applied = clip_delta(alpha, eps);
  const Image edited = m.bundle.generator->forward(apply_edit(z, *m.steering, applied));
  const AttributeVector realized = m.bundle.regressor->forward(edited);

  const fs::path dir(args.out_dir);
  ensure_dir(dir);
  write_png(dir / "original.png", original);
  write_png(dir / "edited.png", edited);
  const Json report = {{"source", source},
                       {"mode", args.mode},
                       {"latent", to_json(z.values)},
                       {"alpha", named(names, alpha.values)},
                       {"requested", named(names, eps)},
                       {"applied", named(names, applied.values)},
                       {"realized", named(names, realized.values)},
                       {"identity", identity_similarity(original, edited, m.bundle)}};
  write_json(dir / "edit.json", report);
  out << report.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- invert

struct InvertArgs {
  std::string checkpoint;
  std::string config;
  std::string image;
  std::optional<std::uint64_t> z_seed;
  int steps = 0;
  int restarts = 0;
  double learning_rate = 0.0;
  std::string delta;
  std::string out_dir = ".";
};

int cmd_invert(const InvertArgs& args, std::ostream& out) {
  if (args.z_seed.has_value() == !args.image.empty()) {
    throw ConfigError("source", "give exactly one of --z-seed or --image");
  }
  std::optional<LoadedModel> m;
  RunConfig cfg;
  if (!args.checkpoint.empty()) {
    m = load_model(args.checkpoint);
    cfg = m->checkpoint.config;
    apply_seed_override(cfg);
  } else {
    cfg = load_config_or_default(args.config);
  }
  if (!args.delta.empty() && !m) throw ConfigError("checkpoint", "--delta needs --checkpoint");
  const ModelBundle bundle = m ? m->bundle : make_world(cfg.world);

  InversionConfig inv = cfg.inversion;
  if (args.steps > 0) inv.steps = args.steps;
  if (args.restarts > 0) inv.restarts = args.restarts;
  if (args.learning_rate > 0.0) inv.learning_rate = args.learning_rate;
  inv.validate();

  const fs::path dir(args.out_dir);
  ensure_dir(dir);
  Image target;
  if (args.z_seed) {
    SeededRng rng(*args.z_seed);
    target = bundle.generator->forward(LatentVector(rng.normal_vector(bundle.latent_dim())));
    write_png(dir / "target.png", target);
  } else {
    target = read_png(args.image);
  }

  Json j;
  if (!args.delta.empty()) {
    const Vector requested = parse_delta(args.delta, bundle.attribute_names);
    const InvertEditResult r = invert_then_edit(target, bundle, *m->steering, requested, inv);
    write_png(dir / "reconstruction.png", r.reconstruction);
    write_png(dir / "edited.png", r.edited);
    j["edit"] = {{"applied", named(bundle.attribute_names, r.report.applied.values)},
                 {"realized_change", named(bundle.attribute_names, r.report.realized_change)},
                 {"identity", r.report.identity}};
    j["inversion"] = {{"z", to_json(r.inversion.z.values)},     {"mse", r.inversion.mse},
                      {"trace", r.inversion.trace},             {"best_restart", r.inversion.best_restart},
                      {"failed_restarts", r.inversion.failed_restarts}, {"steps", inv.steps}};
  } else {
    const InversionResult r = invert(target, bundle, inv);
    write_png(dir / "reconstruction.png", bundle.generator->forward(r.z));
    j["inversion"] = {{"z", to_json(r.z.values)},     {"mse", r.mse},
                      {"trace", r.trace},             {"best_restart", r.best_restart},
                      {"failed_restarts", r.failed_restarts}, {"steps", inv.steps}};
  }
  write_json(dir / "inversion.json", j);
  out << "mse " << fmt("%.3e", j["inversion"]["mse"].get<double>()) << " after " << inv.steps << " steps; wrote "
      << (dir / "inversion.json").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::string config;
  int points = 100;
  std::uint64_t seed = 0;
};

int cmd_gradcheck(const GradcheckArgs& args, std::ostream& out) {
  const RunConfig cfg = load_config_or_default(args.config);
  const ModelBundle bundle = make_world(cfg.world);
  const FullAudit audit = full_audit(bundle, args.points, args.seed, cfg.world == "toy");
  out << format_full_audit(audit);
  const bool pass = audit.max_relative_error() <= kGradcheckTolerance;
  out << (pass ? "PASS" : "FAIL") << " tolerance " << fmt("%.0e", kGradcheckTolerance) << "\n";
  return pass ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- serve

struct ServeArgs {
  std::string checkpoint;
  std::string host = "127.0.0.1";
  int port = 8640;
  int inversion_steps = 500;
  bool reject_concurrent = false;
  std::string cors_origin = "*";
};

int cmd_serve(const ServeArgs& args, std::ostream& out, std::ostream& err) {
  ServiceConfig sc;
  sc.inversion_steps = args.inversion_steps;
  sc.queue_concurrent_edits = !args.reject_concurrent;
  sc.cors_origin = args.cors_origin;
  EditService service(sc);
  if (!args.checkpoint.empty()) service.load(load_checkpoint(args.checkpoint));
  httplib::Server server;
  mount_http_api(server, service);
  if (!server.bind_to_port(args.host, args.port)) {
    err << "error: cannot bind " << args.host << ":" << args.port << "\n";
    return kExitFailure;
  }
  out << "listening on http://" << args.host << ":" << args.port << std::endl;
  server.listen_after_bind();
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attribute steering in generator latent spaces", "latent-steer"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a transform and write checkpoints and a CSV loss log");
  train->add_option("config", train_args.config, "Run config (JSON)");
  train->add_option("--resume", train_args.resume, "Continue from a checkpoint");
  train->add_option("--checkpoint-dir", train_args.checkpoint_dir, "Overrides paths.checkpoint_dir");
  train->add_option("--log", train_args.log, "CSV loss log path")->capture_default_str();
  train->add_option("--log-every", train_args.log_every, "Progress line interval")->check(CLI::PositiveNumber);
  train->add_flag("--oracle", train_args.oracle, "Write the toy closed-form oracle checkpoint instead");
  train->add_flag("--quiet", train_args.quiet, "No progress lines");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Leakage, identity and controllability reports");
  eval->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval->add_option("--out", eval_args.out_dir, "Overrides paths.report_dir");
  eval->add_option("--targets", eval_args.targets, "single | all")->capture_default_str();
  eval->add_option("--n-images", eval_args.n_images);
  eval->add_option("--repeats", eval_args.repeats);
  eval->add_option("--probe", eval_args.probe);
  eval->add_option("--pair-study", eval_args.pair_attribute, "Attribute for a +/-0.4 pair study");
  eval->add_option("--pairs", eval_args.pairs)->capture_default_str();

  EditArgs edit_args;
  std::uint64_t edit_seed = 0;
  auto* edit = app.add_subcommand("edit", "Edit one latent and write original.png, edited.png, edit.json");
  edit->add_option("--checkpoint", edit_args.checkpoint)->required();
  auto* edit_seed_opt = edit->add_option("--z-seed", edit_seed, "Sample z from N(0, I) with this seed");
  auto* edit_image_opt = edit->add_option("--image", edit_args.image, "Invert this PNG first");
  edit_seed_opt->excludes(edit_image_opt);
  edit->add_option("--delta", edit_args.delta, "e.g. background=+0.3,size=-0.2")->required();
  edit->add_option("--mode", edit_args.mode, "relative | absolute-target")->capture_default_str();
  edit->add_option("--out", edit_args.out_dir)->capture_default_str();
  edit->add_option("--inversion-steps", edit_args.inversion_steps);

  InvertArgs invert_args;
  std::uint64_t invert_seed = 0;
  auto* inv = app.add_subcommand("invert", "Invert an image and write inversion.json");
  inv->add_option("--checkpoint", invert_args.checkpoint);
  inv->add_option("--config", invert_args.config);
  auto* inv_seed_opt = inv->add_option("--z-seed", invert_seed, "Target is G(z) with z from this seed");
  auto* inv_image_opt = inv->add_option("--image", invert_args.image);
  inv_seed_opt->excludes(inv_image_opt);
  inv->add_option("--steps", invert_args.steps, "e.g. 500 or 4000");
  inv->add_option("--restarts", invert_args.restarts);
  inv->add_option("--lr", invert_args.learning_rate);
  inv->add_option("--delta", invert_args.delta, "Edit the inverted latent");
  inv->add_option("--out", invert_args.out_dir)->capture_default_str();

  GradcheckArgs gc_args;
  auto* gc = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradient audit");
  gc->add_option("--config", gc_args.config);
  gc->add_option("--points", gc_args.points)->capture_default_str()->check(CLI::PositiveNumber);
  gc->add_option("--seed", gc_args.seed)->capture_default_str();

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "HTTP editing service");
  serve->add_option("--checkpoint", serve_args.checkpoint);
  serve->add_option("--host", serve_args.host)->capture_default_str();
  serve->add_option("--port", serve_args.port)->capture_default_str();
  serve->add_option("--inversion-steps", serve_args.inversion_steps)->capture_default_str();
  serve->add_flag("--reject-concurrent", serve_args.reject_concurrent, "409 instead of queueing");
  serve->add_option("--cors-origin", serve_args.cors_origin)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (*train) return cmd_train(train_args, out);
    if (*eval) return cmd_eval(eval_args, out);
    if (*edit) {
      if (*edit_seed_opt) edit_args.z_seed = edit_seed;
      return cmd_edit(edit_args, out);
    }
    if (*inv) {
      if (*inv_seed_opt) invert_args.z_seed = invert_seed;
      return cmd_invert(invert_args, out);
    }
    if (*gc) return cmd_gradcheck(gc_args, out);
    if (*serve) return cmd_serve(serve_args, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace latent_steer
