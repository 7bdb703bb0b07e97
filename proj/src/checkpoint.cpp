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

#include "latent_steer/checkpoint.hpp"

#include "json_config.hpp"
#include "latent_steer/errors.hpp"
#include "latent_steer/io.hpp"
#include "latent_steer/toy_world.hpp"

namespace latent_steer {

using detail::Json;
using detail::ObjectReader;

namespace {

constexpr const char* kKindTransform = "transform";
constexpr const char* kKindToyOracle = "toy-oracle";

Json manifest_to_json(const ParamManifest& manifest) {
  Json entries = Json::array();
  for (const auto& e : manifest.entries()) {
    entries.push_back({{"name", e.name}, {"shape", e.shape}, {"init", e.init}});
  }
  return entries;
}

ParamManifest manifest_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("checkpoint.transform.manifest", "expected an array");
  std::vector<ParamEntry> entries;
  for (size_t k = 0; k < j.size(); ++k) {
    ObjectReader r(j[k], "checkpoint.transform.manifest[" + std::to_string(k) + "]");
    ParamEntry e;
    e.name = r.string("name");
    const Json& shape = r.raw("shape");
    if (!shape.is_array()) throw ConfigError(r.field("shape"), "expected an array");
    for (const auto& d : shape) {
      if (!d.is_number_integer() || d.get<long>() < 0) {
        throw ConfigError(r.field("shape"), "dimensions must be non-negative integers");
      }
      e.shape.push_back(d.get<Index>());
    }
    e.init = r.string("init", "");
    r.finish();
    entries.push_back(std::move(e));
  }
  return ParamManifest(std::move(entries));
}

Vector payload(ObjectReader& r, const std::string& key, Index expected) {
  const std::string text = r.string(key);
  try {
    return decode_float32(text, expected);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(r.field(key), e.what());
  }
}

}  // namespace

Index Checkpoint::latent_dim() const { return transform ? transform->latent_dim() : toy::kLatentDim; }

Index Checkpoint::num_attributes() const {
  return transform ? transform->num_attributes() : toy::kNumAttributes;
}

Checkpoint make_checkpoint(const TransformModule& transform, const AdamState& optimizer, long iteration,
                           const RunConfig& config, const ModelBundle& bundle) {
  Checkpoint c;
  c.kind = CheckpointKind::kTransform;
  c.transform = transform;
  c.optimizer = optimizer;
  c.iteration = iteration;
  c.config = config;
  c.attribute_names = bundle.attribute_names;
  return c;
}

Checkpoint make_oracle_checkpoint(const RunConfig& config, const ModelBundle& bundle) {
  if (config.world != "toy") throw ConfigError("world", "oracle checkpoints exist only for the toy world");
  Checkpoint c;
  c.kind = CheckpointKind::kToyOracle;
  c.config = config;
  c.attribute_names = bundle.attribute_names;
  return c;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Json j;
  j["format_version"] = ckpt.format_version;
  j["kind"] = ckpt.kind == CheckpointKind::kTransform ? kKindTransform : kKindToyOracle;
  j["attribute_names"] = ckpt.attribute_names;
  j["config"] = detail::run_config_to_json(ckpt.config);
  j["rng"] = {{"algorithm", std::string(SeededRng::kAlgorithm)},
              {"seed", ckpt.config.seed()},
              {"next_iteration", ckpt.iteration}};
  if (ckpt.transform) {
    const TransformModule& t = *ckpt.transform;
    j["transform"] = {{"kind", std::string(to_string(t.kind()))},
                      {"latent_dim", t.latent_dim()},
                      {"num_attributes", t.num_attributes()},
                      {"normalization", {{"enabled", t.normalization().enabled}, {"scale", t.normalization().scale}}},
                      {"leaky_slope", t.leaky_slope()},
                      {"manifest", manifest_to_json(t.manifest())},
                      {"params", encode_float32(t.params())}};
  }
  if (ckpt.optimizer) {
    const AdamState& a = *ckpt.optimizer;
    j["optimizer"] = {{"algorithm", "adam"},
                      {"step", a.step()},
                      {"size", a.first_moment().size()},
                      {"m", encode_float32(a.first_moment())},
                      {"v", encode_float32(a.second_moment())}};
  }
  return j.dump(2) + "\n";
}

Checkpoint parse_checkpoint(std::string_view json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("checkpoint", std::string("malformed JSON: ") + e.what());
  }
  ObjectReader r(j, "checkpoint");
  Checkpoint c;
  if (!r.has("format_version")) throw ConfigError("checkpoint.format_version", "missing required key");
  c.format_version = static_cast<int>(r.integer("format_version"));
  if (c.format_version != kCheckpointFormatVersion) {
    throw ConfigError("checkpoint.format_version",
                      "unsupported version " + std::to_string(c.format_version));
  }
  const std::string kind = r.string("kind");
  if (kind == kKindTransform) {
    c.kind = CheckpointKind::kTransform;
  } else if (kind == kKindToyOracle) {
    c.kind = CheckpointKind::kToyOracle;
  } else {
    throw ConfigError("checkpoint.kind", "unknown kind '" + kind + "'");
  }
  c.config = detail::run_config_from_json(r.raw("config"), "checkpoint.config");
  if (r.has("attribute_names")) {
    const Json& names = r.raw("attribute_names");
    if (!names.is_array()) throw ConfigError("checkpoint.attribute_names", "expected an array");
    for (const auto& n : names) {
      if (!n.is_string()) throw ConfigError("checkpoint.attribute_names", "expected strings");
      c.attribute_names.push_back(n.get<std::string>());
    }
  }
  if (r.has("rng")) {
    ObjectReader g = r.object("rng");
    const std::string algorithm = g.string("algorithm");
    if (algorithm != SeededRng::kAlgorithm) throw ConfigError(g.field("algorithm"), "unsupported RNG '" + algorithm + "'");
    if (g.unsigned_integer("seed", c.config.seed()) != c.config.seed()) {
      throw ConfigError(g.field("seed"), "does not match the config snapshot seed");
    }
    c.iteration = g.integer("next_iteration", 0);
    if (c.iteration < 0) throw ConfigError(g.field("next_iteration"), "must be non-negative");
    g.finish();
  }

  if (c.kind == CheckpointKind::kTransform) {
    if (!r.has("transform")) throw ConfigError("checkpoint.transform", "missing required key");
    ObjectReader t = r.object("transform");
    TransformKind tk;
    try {
      tk = parse_transform_kind(t.string("kind"));
    } catch (const ConfigError& e) {
      throw ConfigError(t.field("kind"), e.reason());
    }
    const long m = t.integer("latent_dim");
    const long n = t.integer("num_attributes");
    if (m < 1 || n < 1) throw ConfigError(t.field("latent_dim"), "dimensions must be positive");
    Normalization norm;
    {
      ObjectReader nr = t.object("normalization");
      norm.enabled = nr.boolean("enabled", false);
      norm.scale = nr.number("scale", norm.scale);
      nr.finish();
    }
    const double slope = t.number("leaky_slope", TransformModule::kDefaultLeakySlope);
    TransformModule module(tk, m, n, norm, slope);
    const ParamManifest manifest = manifest_from_json(t.raw("manifest"));
    if (!(manifest == module.manifest())) {
      throw ConfigError(t.field("manifest"), "does not match the layout of a " + std::string(to_string(tk)) +
                                                 " transform with m=" + std::to_string(m) +
                                                 ", N=" + std::to_string(n));
    }
    module.set_params(payload(t, "params", manifest.total_size()));
    t.finish();
    c.transform = std::move(module);
  } else if (r.has("transform")) {
    throw ConfigError("checkpoint.transform", "oracle checkpoints carry no transform");
  }

  if (r.has("optimizer")) {
    ObjectReader o = r.object("optimizer");
    if (o.string("algorithm") != "adam") throw ConfigError(o.field("algorithm"), "only adam is supported");
    const long step = o.integer("step");
    const long size = o.integer("size");
    if (!c.transform || size != c.transform->params().size()) {
      throw ConfigError(o.field("size"), "optimizer state does not match the parameter count");
    }
    Vector m = payload(o, "m", size);
    Vector v = payload(o, "v", size);
    o.finish();
    c.optimizer = AdamState(std::move(m), std::move(v), step);
  }
  r.finish();
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError("checkpoint", e.what());
  }
  return parse_checkpoint(text);
}

std::shared_ptr<const Steering> make_steering(const Checkpoint& ckpt, const ModelBundle& bundle) {
  if (ckpt.latent_dim() != bundle.latent_dim() || ckpt.num_attributes() != bundle.num_attributes()) {
    throw DimensionError("checkpoint has m=" + std::to_string(ckpt.latent_dim()) + ", N=" +
                         std::to_string(ckpt.num_attributes()) + " but the world has m=" +
                         std::to_string(bundle.latent_dim()) + ", N=" + std::to_string(bundle.num_attributes()));
  }
  if (!ckpt.attribute_names.empty() && ckpt.attribute_names.size() != static_cast<size_t>(bundle.num_attributes())) {
    throw DimensionError("checkpoint names " + std::to_string(ckpt.attribute_names.size()) +
                         " attributes but the world has " + std::to_string(bundle.num_attributes()));
  }
  if (ckpt.kind == CheckpointKind::kToyOracle) return std::make_shared<const toy::OracleSteering>();
  return std::make_shared<const TransformModule>(*ckpt.transform);
}

}  // namespace latent_steer
