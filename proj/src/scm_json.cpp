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

#include "twinworld/scm_json.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include "twinworld/error.hpp"

namespace twinworld {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::schema_violation, path + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) field_error(path + "." + key, "missing");
  return *it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) field_error(path, "expected a number");
  return v.get<double>();
}

bool as_binary(const json& v, const std::string& path) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer() || v.is_number_unsigned()) {
    const auto x = v.get<std::int64_t>();
    if (x == 0 || x == 1) return x == 1;
  }
  field_error(path, "expected 0 or 1");
}

std::string node_path(std::size_t i, const json& node) {
  std::string path = "nodes[" + std::to_string(i) + "]";
  if (auto it = node.find("id"); it != node.end() && it->is_string()) {
    path += " (id \"" + it->get<std::string>() + "\")";
  }
  return path;
}

json value_to_json(const Value& v) {
  if (v.is_bool()) return v.as_bool();
  if (v.is_integer()) return v.as_integer();
  return v.as_real();
}

}  // namespace

json scm_to_json(const ScmSpec& scm) {
  json nodes = json::array();
  for (const ScmNode& node : scm.nodes) {
    json n = {{"id", node.id}};
    if (node.kind == NodeKind::prior) {
      n["kind"] = "prior";
      n["p"] = node.p;
    } else {
      n["kind"] = "dependent";
      n["parents"] = node.parents;
      n["theta"] = node.theta;
      n["q"] = node.q;
    }
    nodes.push_back(std::move(n));
  }
  return {{"nodes", std::move(nodes)}};
}

ScmSpec scm_from_json(const json& doc) {
  if (!doc.is_object()) field_error("model", "expected an object");
  const json& nodes = require(doc, "nodes", "model");
  if (!nodes.is_array()) field_error("model.nodes", "expected an array");
  ScmSpec scm;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const json& n = nodes[i];
    const std::string path = node_path(i, n);
    if (!n.is_object()) field_error(path, "expected an object");
    ScmNode node;
    const json& id = require(n, "id", path);
    if (!id.is_string()) field_error(path + ".id", "expected a string");
    node.id = id.get<std::string>();
    std::string kind;
    if (auto it = n.find("kind"); it != n.end()) {
      if (!it->is_string()) field_error(path + ".kind", "expected a string");
      kind = it->get<std::string>();
    } else {
      kind = n.contains("p") ? "prior" : "dependent";
    }
    if (kind == "prior") {
      node.kind = NodeKind::prior;
      node.p = as_number(require(n, "p", path), path + ".p");
    } else if (kind == "dependent") {
      node.kind = NodeKind::dependent;
      const json& parents = require(n, "parents", path);
      if (!parents.is_array()) field_error(path + ".parents", "expected an array");
      for (const json& p : parents) {
        if (!p.is_string()) field_error(path + ".parents", "expected node ids");
        node.parents.push_back(p.get<std::string>());
      }
      const json& theta = require(n, "theta", path);
      if (!theta.is_array()) field_error(path + ".theta", "expected an array");
      for (const json& t : theta) node.theta.push_back(as_number(t, path + ".theta"));
      node.q = as_number(require(n, "q", path), path + ".q");
    } else {
      field_error(path + ".kind", "expected \"prior\" or \"dependent\"");
    }
    scm.nodes.push_back(std::move(node));
  }
  scm.validate();
  return scm;
}

json query_to_json(const BenchQuery& query) {
  json evidence = json::object();
  for (const auto& [id, v] : query.evidence) evidence[id] = v ? 1 : 0;
  json doc = {{"evidence", std::move(evidence)}, {"predict", query.target}};
  if (!query.interventions.empty()) {
    json d = json::object();
    for (const auto& [id, v] : query.interventions) d[id] = v ? 1 : 0;
    d["type"] = std::string(to_string(query.do_type));
    doc["do"] = std::move(d);
  }
  return doc;
}

BenchQuery query_from_json(const json& doc) {
  if (!doc.is_object()) field_error("query", "expected an object");
  BenchQuery query;
  if (auto it = doc.find("evidence"); it != doc.end()) {
    if (!it->is_object()) field_error("query.evidence", "expected an object");
    for (const auto& [id, v] : it->items()) {
      query.evidence[id] = as_binary(v, "query.evidence." + id);
    }
  }
  if (auto it = doc.find("do"); it != doc.end()) {
    if (!it->is_object()) field_error("query.do", "expected an object");
    for (const auto& [key, v] : it->items()) {
      if (key == "type") {
        const std::string t = v.is_string() ? v.get<std::string>() : "";
        if (t == "CF") {
          query.do_type = DoType::counterfactual;
        } else if (t == "IV") {
          query.do_type = DoType::interventional;
        } else {
          field_error("query.do.type", "expected \"CF\" or \"IV\"");
        }
      } else {
        query.interventions[key] = as_binary(v, "query.do." + key);
      }
    }
  }
  const json& target = require(doc, "predict", "query");
  if (!target.is_string()) field_error("query.predict", "expected a node id");
  query.target = target.get<std::string>();
  return query;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::schema_violation, path + ": cannot open file");
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw Error(ErrorCode::schema_violation,
                path + ":" + std::to_string(line) + ":" + std::to_string(column) +
                    ": invalid JSON");
  }
}

json trace_to_json(const Trace& trace) {
  json entries = json::array();
  for (const TraceEntry& e : trace.entries()) {
    json parents = json::array();
    for (const Address& p : e.parents) parents.push_back(p.key());
    entries.push_back({{"address", e.address.key()},
                       {"value", value_to_json(e.value)},
                       {"role", std::string(to_string(e.role))},
                       {"family", std::string(to_string(e.family))},
                       {"log_prior", e.log_prior},
                       {"log_proposal", e.log_proposal},
                       {"parents", std::move(parents)}});
  }
  json predictions = json::object();
  for (const auto& [label, v] : trace.predictions()) predictions[label] = value_to_json(v);
  return {{"log_weight", trace.log_weight()},
          {"entries", std::move(entries)},
          {"predictions", std::move(predictions)}};
}

}  // namespace twinworld
