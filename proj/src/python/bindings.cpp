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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "latent_steer/checkpoint.hpp"
#include "latent_steer/cli.hpp"
#include "latent_steer/config.hpp"
#include "latent_steer/errors.hpp"
#include "latent_steer/evaluation.hpp"
#include "latent_steer/inversion.hpp"
#include "latent_steer/losses.hpp"
#include "latent_steer/pipeline.hpp"
#include "latent_steer/toy_world.hpp"

namespace py = pybind11;
namespace ls = latent_steer;

namespace {

// Frozen toy collaborators shared by the free functions below.
const ls::ModelBundle& toy_bundle() {
  static const ls::ModelBundle bundle = ls::toy::make_bundle();
  return bundle;
}

ls::Matrix image_to_matrix(const ls::Image& img) { return img.matrix(); }

ls::Image matrix_to_image(const ls::Matrix& m) { return m.array(); }

py::tuple run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full{"latent-steer"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : full) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = ls::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

// A trained or oracle steering loaded from a checkpoint file.
struct PySteering {
  ls::Checkpoint checkpoint;
  std::shared_ptr<const ls::Steering> steering;

  explicit PySteering(const std::string& path)
      : checkpoint(ls::load_checkpoint(path)), steering(ls::make_steering(checkpoint, toy_bundle())) {}

  ls::Vector apply_edit(const ls::Vector& z, const ls::Vector& delta) const {
    return ls::apply_edit(ls::LatentVector(z), *steering, ls::EditDelta(delta)).values;
  }
  double controllability(int n_probe, std::uint64_t seed) const {
    return ls::controllability(*steering, toy_bundle(), n_probe, seed).mean_abs_error;
  }
  std::string leakage_table(int n_images, int repeats, std::uint64_t seed) const {
    ls::LeakageConfig cfg;
    cfg.n_images = n_images;
    cfg.repeats = repeats;
    cfg.seed = seed;
    return ls::report_to_text(ls::leakage_report(*steering, toy_bundle(),
                                                 ls::single_targets(toy_bundle().num_attributes()),
                                                 checkpoint.config.bins, cfg));
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Attribute steering over the analytic toy generator";

  py::register_exception<ls::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ls::DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ls::PreconditionError>(m, "PreconditionError", PyExc_ValueError);

  m.attr("LATENT_DIM") = ls::toy::kLatentDim;
  m.attr("NUM_ATTRIBUTES") = ls::toy::kNumAttributes;
  m.attr("ATTRIBUTE_NAMES") = toy_bundle().attribute_names;

  // Latent core.
  m.def(
      "clip_delta",
      [](const ls::Vector& alpha, const ls::Vector& eps) {
        return ls::clip_delta(ls::AttributeVector(alpha), eps).values;
      },
      py::arg("alpha"), py::arg("epsilon"));
  m.def(
      "sample_epsilon",
      [](const ls::Vector& alpha, std::uint64_t seed) {
        ls::SeededRng rng(seed);
        const ls::EpsilonSample s = ls::sample_epsilon(ls::AttributeVector(alpha), rng);
        return py::make_tuple(s.epsilon, s.delta.values);
      },
      py::arg("alpha"), py::arg("seed"), "Returns (epsilon, delta).");

  // Toy world.
  m.def(
      "generate", [](const ls::Vector& z) { return image_to_matrix(toy_bundle().generator->forward(ls::LatentVector(z))); },
      py::arg("z"));
  m.def(
      "regress", [](const ls::Matrix& img) { return toy_bundle().regressor->forward(matrix_to_image(img)).values; },
      py::arg("image"));
  m.def(
      "discriminate", [](const ls::Matrix& img) { return toy_bundle().discriminator->forward(matrix_to_image(img)); },
      py::arg("image"));
  m.def(
      "identity_similarity",
      [](const ls::Matrix& a, const ls::Matrix& b) {
        return ls::identity_similarity(matrix_to_image(a), matrix_to_image(b), toy_bundle());
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "oracle_attributes", [](const ls::Vector& z) { return ls::toy::oracle_attributes(ls::LatentVector(z)).values; },
      py::arg("z"));
  m.def(
      "oracle_direction",
      [](const ls::Vector& z, ls::Index i, double delta) { return ls::toy::oracle_direction(ls::LatentVector(z), i, delta); },
      py::arg("z"), py::arg("attribute"), py::arg("delta"));

  // Losses.
  m.def(
      "reg_loss",
      [](const ls::Vector& predicted, const ls::Vector& target, const std::string& mode) {
        return ls::reg_loss(predicted, target, ls::parse_reg_mode(mode)).value;
      },
      py::arg("predicted"), py::arg("target"), py::arg("mode") = "standard");
  m.def(
      "disc_loss", [](double score) { return ls::disc_loss(score).value; }, py::arg("score"));
  m.def(
      "total_loss",
      [](double reg, double disc, double content, double w_reg, double w_disc, double w_content) {
        return ls::total_loss(reg, disc, content, ls::LossWeights{w_reg, w_disc, w_content}).total;
      },
      py::arg("reg"), py::arg("disc"), py::arg("content"), py::arg("w_reg") = 10.0, py::arg("w_disc") = 0.05,
      py::arg("w_content") = 0.05);

  // Inversion.
  m.def(
      "invert",
      [](const ls::Matrix& target, int steps, int restarts, double learning_rate, std::uint64_t seed) {
        ls::InversionConfig cfg;
        cfg.steps = steps;
        cfg.restarts = restarts;
        cfg.learning_rate = learning_rate;
        cfg.seed = seed;
        ls::InversionResult r;
        {
          py::gil_scoped_release release;
          r = ls::invert(matrix_to_image(target), toy_bundle(), cfg);
        }
        py::dict out;
        out["z"] = r.z.values;
        out["mse"] = r.mse;
        out["trace"] = r.trace;
        out["best_restart"] = r.best_restart;
        return out;
      },
      py::arg("target"), py::arg("steps") = 500, py::arg("restarts") = 3, py::arg("learning_rate") = 0.05,
      py::arg("seed") = 0);

  // Training.
  m.def(
      "train",
      [](const std::string& config_json) {
        const ls::RunConfig cfg = ls::parse_run_config(config_json);
        const ls::ModelBundle bundle = ls::make_world(cfg.world);
        ls::TrainResult r = [&] {
          py::gil_scoped_release release;
          return ls::train(ls::initial_transform(cfg, bundle), bundle, cfg.train);
        }();
        std::vector<std::vector<double>> log;
        for (const auto& l : r.record.losses) log.push_back({l.reg, l.disc, l.content, l.total});
        return py::make_tuple(r.transform.params(), log);
      },
      py::arg("config_json") = "{}", "Returns (parameters, per-iteration [reg, disc, content, total]).");
  m.def("default_config", [] { return ls::dump_run_config(ls::RunConfig{}); });

  py::class_<PySteering>(m, "Steering")
      .def(py::init<const std::string&>(), py::arg("checkpoint_path"))
      .def("apply_edit", &PySteering::apply_edit, py::arg("z"), py::arg("delta"))
      .def("controllability", &PySteering::controllability, py::arg("n_probe") = 256, py::arg("seed") = 0)
      .def("leakage_table", &PySteering::leakage_table, py::arg("n_images") = 200, py::arg("repeats") = 3,
           py::arg("seed") = 0)
      .def_property_readonly("iteration", [](const PySteering& s) { return s.checkpoint.iteration; });

  m.def("run_cli", &run_cli, py::arg("args"), "Runs the command-line tool in-process; returns (code, stdout, stderr).");
}
