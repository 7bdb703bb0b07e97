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

#include <string>

#include "json.hpp"
#include "latent_steer/config.hpp"

namespace latent_steer::detail {

using Json = nlohmann::json;

Json run_config_to_json(const RunConfig& cfg);
// `prefix` is prepended to field names in error messages.
RunConfig run_config_from_json(const Json& j, const std::string& prefix = "");

// Strict view of a JSON object: typed lookups with field-named errors and a
// final check that no unknown keys remain.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path);

  bool has(const std::string& key) const;
  const Json& raw(const std::string& key);
  double number(const std::string& key, double fallback);
  double number(const std::string& key);
  long integer(const std::string& key, long fallback);
  long integer(const std::string& key);
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback);
  bool boolean(const std::string& key, bool fallback);
  std::string string(const std::string& key, const std::string& fallback);
  std::string string(const std::string& key);
  ObjectReader object(const std::string& key);
  std::string field(const std::string& key) const;
  void finish() const;

 private:
  const Json& require(const std::string& key);
  const Json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

}  // namespace latent_steer::detail
