/*
 * Copyright 2026 The dualpath Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DUALPATH_CONFIG_HPP
#define DUALPATH_CONFIG_HPP

#include "dualpath/simnet.hpp"

#include <string>
#include <string_view>

namespace dualpath {

/// Parses a JSON scenario document. Absent fields keep their defaults,
/// unknown fields are rejected, and each "key=value" override (dotted keys,
/// JSON values; bare words are taken as strings) is applied last. Throws
/// Error(invalid_config) naming the offending field.
ScenarioConfig parse_config(std::string_view json_text, const std::vector<std::string>& overrides = {});

/// Reads and parses a config file. Throws Error(invalid_config) when the file
/// cannot be read.
ScenarioConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Every field, defaults included. parse_config(config_to_json(c)) == c.
std::string config_to_json(const ScenarioConfig& config);

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

} // namespace dualpath

#endif
