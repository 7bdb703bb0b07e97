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

#include "latent_steer/http_api.hpp"

#include <cmath>

#include "json.hpp"
#include "latent_steer/io.hpp"

namespace latent_steer {

namespace {

using Json = nlohmann::json;

Json vector_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json named(const EditService& service, const Vector& v) {
  const auto names = service.attribute_names();
  Json out = Json::object();
  for (Index i = 0; i < v.size(); ++i) out[names[static_cast<size_t>(i)]] = v[i];
  return out;
}

std::string png_base64(const Image& img) { return base64_encode(encode_png(img)); }

Json session_json(const EditService& service, const SessionState& s) {
  const Image img = service.render_latent(s.z);
  Json history = Json::array();
  for (const auto& d : s.history) history.push_back(vector_json(d.values));
  Json j = {{"session_id", s.id},
            {"image", png_base64(img)},
            {"attributes", named(service, service.attributes_of(img).values)},
            {"baseline", named(service, s.baseline.values)},
            {"attribute_names", service.attribute_names()},
            {"initial_latent", vector_json(s.initial_z.values)},
            {"latent", vector_json(s.z.values)},
            {"history", history},
            {"created_at", s.created_at}};
  if (s.inversion_mse) j["inversion_mse"] = *s.inversion_mse;
  return j;
}

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, Json{{"error", message}, {"status", status}});
}

Json parse_body(const httplib::Request& req) {
  try {
    Json j = Json::parse(req.body);
    if (!j.is_object()) throw ServiceError(400, "request body must be a JSON object");
    return j;
  } catch (const Json::parse_error&) {
    throw ServiceError(400, "request body is not valid JSON");
  }
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.status(), e.what());
    } catch (const DimensionError& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

}  // namespace

void mount_http_api(httplib::Server& server, EditService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", service.config().cors_origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/attributes", guarded([&service](const httplib::Request&, httplib::Response& res) {
               const auto names = service.attribute_names();
               Json list = Json::array();
               for (size_t k = 0; k < names.size(); ++k) {
                 list.push_back({{"index", k},
                                 {"name", names[k]},
                                 {"latent_dim", service.latent_dim()},
                                 {"num_attributes", service.num_attributes()}});
               }
               send_json(res, 200, list);
             }));

  server.Post("/session", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                const Json body = parse_body(req);
                if (!body.contains("source") || !body["source"].is_object()) {
                  throw ServiceError(400, "body needs a 'source' object with 'seed' or 'image'");
                }
                const Json& source = body["source"];
                const bool has_seed = source.contains("seed");
                const bool has_image = source.contains("image");
                if (has_seed == has_image) throw ServiceError(400, "source needs exactly one of 'seed' or 'image'");
                if (has_seed) {
                  const Json& seed = source["seed"];
                  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
                    throw ServiceError(400, "seed must be a non-negative integer");
                  }
                  send_json(res, 201, session_json(service, service.create_from_seed(seed.get<std::uint64_t>())));
                  return;
                }
                if (!source["image"].is_string()) throw ServiceError(400, "image must be a base64 PNG string");
                Image target;
                try {
                  target = decode_png(base64_decode(source["image"].get<std::string>()));
                } catch (const Error& e) {
                  throw ServiceError(422, std::string("undecodable image: ") + e.what());
                }
                send_json(res, 201, session_json(service, service.create_from_image(target)));
              }));

  server.Get(R"(/session/([0-9a-f]+))", guarded([&service](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, session_json(service, service.session(req.matches[1])));
             }));

  server.Post(R"(/session/([0-9a-f]+)/edit)",
              guarded([&service](const httplib::Request& req, httplib::Response& res) {
                const std::string id = req.matches[1];
                service.session(id);  // 404 before body validation
                const Json body = parse_body(req);
                EditRequest request;
                if (body.contains("mode")) {
                  if (!body["mode"].is_string()) throw ServiceError(400, "mode must be a string");
                  const std::string mode = body["mode"];
                  if (mode == "relative") {
                    request.mode = EditMode::kRelative;
                  } else if (mode == "absolute-target" || mode == "absolute") {
                    request.mode = EditMode::kAbsoluteTarget;
                  } else {
                    throw ServiceError(400, "mode must be 'relative' or 'absolute-target'");
                  }
                }
                if (body.contains("delta")) {
                  if (!body["delta"].is_object()) throw ServiceError(400, "delta must be an object");
                  for (const auto& [key, value] : body["delta"].items()) {
                    if (!value.is_number()) throw ServiceError(400, "delta '" + key + "' must be a number");
                    request.delta.emplace_back(service.attribute_index(key), value.get<double>());
                  }
                }
                const EditOutcome out = service.edit(id, request);
                Json clip = Json::object();
                const auto names = service.attribute_names();
                for (Index i = 0; i < out.requested.size(); ++i) {
                  const double adjust = out.requested[i] - out.applied.values[i];
                  if (adjust != 0.0) clip[names[static_cast<size_t>(i)]] = adjust;
                }
                send_json(res, 200,
                          Json{{"session_id", id},
                               {"image", png_base64(out.image)},
                               {"attributes", named(service, out.realized.values)},
                               {"requested", named(service, out.requested)},
                               {"applied", named(service, out.applied.values)},
                               {"clip_adjustments", clip},
                               {"identity", out.identity},
                               {"step", out.step}});
              }));

  server.Post(R"(/session/([0-9a-f]+)/reset)",
              guarded([&service](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, session_json(service, service.reset(req.matches[1])));
              }));

  server.Get(R"(/session/([0-9a-f]+)/image)",
             guarded([&service](const httplib::Request& req, httplib::Response& res) {
               const Bytes png = encode_png(service.render(req.matches[1]));
               res.status = 200;
               res.set_content(std::string(png.begin(), png.end()), "image/png");
             }));
}

}  // namespace latent_steer
