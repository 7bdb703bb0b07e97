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

#include "latent_steer/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>

#include "json_config.hpp"
#include "latent_steer/errors.hpp"
#include "latent_steer/io.hpp"
#include "latent_steer/toy_world.hpp"

namespace latent_steer {

namespace detail {

ObjectReader::ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "expected a JSON object");
}

std::string ObjectReader::field(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

bool ObjectReader::has(const std::string& key) const { return j_.contains(key); }

const Json& ObjectReader::require(const std::string& key) {
  if (!j_.contains(key)) throw ConfigError(field(key), "missing required key");
  seen_.push_back(key);
  return j_.at(key);
}

const Json& ObjectReader::raw(const std::string& key) { return require(key); }

double ObjectReader::number(const std::string& key) {
  const Json& v = require(key);
  if (!v.is_number()) throw ConfigError(field(key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(field(key), "must be finite");
  return d;
}

double ObjectReader::number(const std::string& key, double fallback) {
  return has(key) ? number(key) : fallback;
}

long ObjectReader::integer(const std::string& key) {
  const Json& v = require(key);
  if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
  return v.get<long>();
}

long ObjectReader::integer(const std::string& key, long fallback) {
  return has(key) ? integer(key) : fallback;
}

std::uint64_t ObjectReader::unsigned_integer(const std::string& key, std::uint64_t fallback) {
  if (!has(key)) return fallback;
  const Json& v = require(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    throw ConfigError(field(key), "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool ObjectReader::boolean(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const Json& v = require(key);
  if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
  return v.get<bool>();
}

std::string ObjectReader::string(const std::string& key) {
  const Json& v = require(key);
  if (!v.is_string()) throw ConfigError(field(key), "expected a string");
  return v.get<std::string>();
}

std::string ObjectReader::string(const std::string& key, const std::string& fallback) {
  return has(key) ? string(key) : fallback;
}

ObjectReader ObjectReader::object(const std::string& key) { return ObjectReader(require(key), field(key)); }

void ObjectReader::finish() const {
  for (const auto& [key, value] : j_.items()) {
    if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
      throw ConfigError(field(key), "unknown key");
    }
  }
}

namespace {

Index attribute_index(const Json& v, const std::string& field, const std::vector<std::string>& names) {
  if (v.is_number_integer()) {
    const long i = v.get<long>();
    if (i < 0 || i >= static_cast<long>(names.size())) throw ConfigError(field, "attribute index out of range");
    return i;
  }
  if (v.is_string()) {
    const auto it = std::find(names.begin(), names.end(), v.get<std::string>());
    if (it == names.end()) throw ConfigError(field, "unknown attribute '" + v.get<std::string>() + "'");
    return it - names.begin();
  }
  throw ConfigError(field, "expected an attribute name or index");
}

std::vector<std::string> world_attribute_names(const std::string& world) {
  if (world == "toy") return {"background", "size", "disk"};
  return {};
}

}  // namespace

Json run_config_to_json(const RunConfig& cfg) {
  Json sampling = {{"mode", cfg.train.sampling.is_joint() ? "joint" : "single"}};
  if (!cfg.train.sampling.is_joint()) sampling["attribute"] = *cfg.train.sampling.single_attribute;
  return Json{
      {"world", cfg.world},
      {"seed", cfg.train.seed},
      {"transform",
       {{"kind", std::string(to_string(cfg.transform))},
        {"normalize", cfg.normalization.enabled},
        {"scale", cfg.normalization.scale}}},
      {"train",
       {{"iterations", cfg.train.iterations},
        {"batch_size", cfg.train.batch_size},
        {"learning_rate", cfg.train.adam.learning_rate},
        {"beta1", cfg.train.adam.beta1},
        {"beta2", cfg.train.adam.beta2},
        {"eps", cfg.train.adam.eps},
        {"sampling", sampling},
        {"reg_mode", std::string(to_string(cfg.train.reg_mode))},
        {"checkpoint_interval", cfg.train.checkpoint_interval},
        {"grad_clip", cfg.train.grad_clip}}},
      {"weights",
       {{"reg", cfg.train.weights.reg}, {"disc", cfg.train.weights.disc}, {"content", cfg.train.weights.content}}},
      {"bins", cfg.bins.edges},
      {"eval", {{"n_images", cfg.eval.n_images}, {"repeats", cfg.eval.repeats}, {"probe", cfg.eval.probe}}},
      {"inversion",
       {{"steps", cfg.inversion.steps},
        {"learning_rate", cfg.inversion.learning_rate},
        {"restarts", cfg.inversion.restarts},
        {"content_weight", cfg.inversion.content_weight}}},
      {"paths", {{"checkpoint_dir", cfg.paths.checkpoint_dir}, {"report_dir", cfg.paths.report_dir}}},
  };
}

RunConfig run_config_from_json(const Json& j, const std::string& prefix) {
  RunConfig cfg;
  ObjectReader root(j, prefix);
  cfg.world = root.string("world", cfg.world);
  const std::vector<std::string> names = world_attribute_names(cfg.world);
  if (names.empty()) throw ConfigError(root.field("world"), "unsupported world '" + cfg.world + "'");
  cfg.set_seed(root.unsigned_integer("seed", 0));

  if (root.has("transform")) {
    ObjectReader t = root.object("transform");
    if (t.has("kind")) {
      try {
        cfg.transform = parse_transform_kind(t.string("kind"));
      } catch (const ConfigError& e) {
        throw ConfigError(t.field("kind"), e.reason());
      }
    }
    cfg.normalization.enabled = t.boolean("normalize", cfg.normalization.enabled);
    cfg.normalization.scale = t.number("scale", cfg.normalization.scale);
    if (!(cfg.normalization.scale > 0.0)) throw ConfigError(t.field("scale"), "must be positive");
    t.finish();
  }

  if (root.has("train")) {
    ObjectReader t = root.object("train");
    TrainConfig& tc = cfg.train;
    tc.iterations = t.integer("iterations", tc.iterations);
    tc.batch_size = static_cast<int>(t.integer("batch_size", tc.batch_size));
    tc.adam.learning_rate = t.number("learning_rate", tc.adam.learning_rate);
    tc.adam.beta1 = t.number("beta1", tc.adam.beta1);
    tc.adam.beta2 = t.number("beta2", tc.adam.beta2);
    tc.adam.eps = t.number("eps", tc.adam.eps);
    if (t.has("sampling")) {
      ObjectReader s = t.object("sampling");
      const std::string mode = s.string("mode", "joint");
      if (mode == "joint") {
        tc.sampling = SamplingMode::joint();
      } else if (mode == "single") {
        tc.sampling = SamplingMode::single(attribute_index(s.raw("attribute"), s.field("attribute"), names));
      } else {
        throw ConfigError(s.field("mode"), "expected 'joint' or 'single'");
      }
      s.finish();
    }
    if (t.has("reg_mode")) {
      try {
        tc.reg_mode = parse_reg_mode(t.string("reg_mode"));
      } catch (const ConfigError& e) {
        throw ConfigError(t.field("reg_mode"), e.reason());
      }
    }
    tc.checkpoint_interval = t.integer("checkpoint_interval", tc.checkpoint_interval);
    tc.grad_clip = t.number("grad_clip", tc.grad_clip);
    t.finish();
  }

  if (root.has("weights")) {
    ObjectReader w = root.object("weights");
    cfg.train.weights.reg = w.number("reg", cfg.train.weights.reg);
    cfg.train.weights.disc = w.number("disc", cfg.train.weights.disc);
    cfg.train.weights.content = w.number("content", cfg.train.weights.content);
    w.finish();
  }

  if (root.has("bins")) {
    const Json& b = root.raw("bins");
    if (!b.is_array()) throw ConfigError(root.field("bins"), "expected an array of edges");
    cfg.bins.edges.clear();
    for (const auto& e : b) {
      if (!e.is_number()) throw ConfigError(root.field("bins"), "edges must be numbers");
      cfg.bins.edges.push_back(e.get<double>());
    }
    try {
      cfg.bins.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(root.field("bins"), e.reason());
    }
  }

  if (root.has("eval")) {
    ObjectReader e = root.object("eval");
    cfg.eval.n_images = static_cast<int>(e.integer("n_images", cfg.eval.n_images));
    cfg.eval.repeats = static_cast<int>(e.integer("repeats", cfg.eval.repeats));
    cfg.eval.probe = static_cast<int>(e.integer("probe", cfg.eval.probe));
    if (cfg.eval.n_images < 1) throw ConfigError(e.field("n_images"), "must be at least 1");
    if (cfg.eval.repeats < 2) throw ConfigError(e.field("repeats"), "must be at least 2");
    if (cfg.eval.probe < 1) throw ConfigError(e.field("probe"), "must be at least 1");
    e.finish();
  }

  if (root.has("inversion")) {
    ObjectReader v = root.object("inversion");
    cfg.inversion.steps = static_cast<int>(v.integer("steps", cfg.inversion.steps));
    cfg.inversion.learning_rate = v.number("learning_rate", cfg.inversion.learning_rate);
    cfg.inversion.restarts = static_cast<int>(v.integer("restarts", cfg.inversion.restarts));
    cfg.inversion.content_weight = v.number("content_weight", cfg.inversion.content_weight);
    v.finish();
    try {
      cfg.inversion.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(prefix.empty() ? e.field() : prefix + "." + e.field(), e.reason());
    }
  }

  if (root.has("paths")) {
    ObjectReader p = root.object("paths");
    cfg.paths.checkpoint_dir = p.string("checkpoint_dir", cfg.paths.checkpoint_dir);
    cfg.paths.report_dir = p.string("report_dir", cfg.paths.report_dir);
    p.finish();
  }
  root.finish();

  try {
    cfg.train.validate(static_cast<Index>(names.size()));
  } catch (const ConfigError& e) {
    throw ConfigError(prefix.empty() ? e.field() : prefix + "." + e.field(), e.reason());
  }
  return cfg;
}

}  // namespace detail

void RunConfig::set_seed(std::uint64_t seed) {
  train.seed = seed;
  inversion.seed = seed;
}

RunConfig parse_run_config(std::string_view json_text) {
  detail::Json j;
  try {
    j = detail::Json::parse(json_text);
  } catch (const detail::Json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  return detail::run_config_from_json(j);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError("config", e.what());
  }
  return parse_run_config(text);
}

std::string dump_run_config(const RunConfig& cfg) { return detail::run_config_to_json(cfg).dump(2) + "\n"; }

void apply_seed_override(RunConfig& cfg, const char* value) {
  if (value == nullptr || *value == '\0') return;
  errno = 0;
  char* end = nullptr;
  const unsigned long long seed = std::strtoull(value, &end, 10);
  if (errno != 0 || end == value || *end != '\0' || value[0] == '-') {
    throw ConfigError(kSeedEnvVar, std::string("expected a non-negative integer, got '") + value + "'");
  }
  cfg.set_seed(static_cast<std::uint64_t>(seed));
}

void apply_seed_override(RunConfig& cfg) { apply_seed_override(cfg, std::getenv(kSeedEnvVar)); }

ModelBundle make_world(std::string_view world) {
  if (world == "toy") return toy::make_bundle();
  throw ConfigError("world", "unsupported world '" + std::string(world) + "'");
}

}  // namespace latent_steer
