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

// Eigen must precede httplib: <resolv.h> defines a `_res` macro that breaks Eigen.
#include "latent_steer/edit_service.hpp"

#include "httplib.h"

namespace latent_steer {

// Registers the JSON API on `server`:
//   GET  /attributes
//   POST /session                {"source": {"seed": n} | {"image": "<base64 png>"}}
//   GET  /session/{id}
//   POST /session/{id}/edit      {"delta": {"<name|index>": v}, "mode": "relative" | "absolute-target"}
//   POST /session/{id}/reset
//   GET  /session/{id}/image     image/png
// Every response carries CORS headers for the configured origin.
void mount_http_api(httplib::Server& server, EditService& service);

}  // namespace latent_steer
