// Copyright 2026 The Twinworld Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>

#include <json.hpp>

#include "twinworld/scm.hpp"

namespace twinworld {

// File formats:
//   model  {"nodes": [{"id": "A", "kind": "prior", "p": 0.6},
//                     {"id": "B", "kind": "dependent", "parents": ["A"],
//                      "theta": [1.0], "q": 0.2}]}
//   query  {"evidence": {"B": 1}, "do": {"A": 1, "type": "CF"},
//           "predict": "B"}
// Parse errors throw Error(schema_violation) with the field path.

nlohmann::json scm_to_json(const ScmSpec& scm);
ScmSpec scm_from_json(const nlohmann::json& doc);

nlohmann::json query_to_json(const BenchQuery& query);
BenchQuery query_from_json(const nlohmann::json& doc);

/// Reads and parses a JSON file; syntax errors report line and column.
nlohmann::json read_json_file(const std::string& path);

nlohmann::json trace_to_json(const Trace& trace);

}  // namespace twinworld
