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

#include "twinworld/scm.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <sstream>
#include <utility>

#include "twinworld/error.hpp"

namespace twinworld {

namespace {

constexpr double kThetaSumTolerance = 1e-9;
constexpr int kMaxEvidenceAttempts = 10000;

[[noreturn]] void schema_error(const std::string& node, const std::string& what) {
  throw Error(ErrorCode::schema_violation, "node \"" + node + "\": " + what);
}

bool is_probability(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

}  // namespace

std::size_t ScmSpec::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) return i;
  }
  throw Error(ErrorCode::unknown_node, "unknown node \"" + std::string(id) + "\"");
}

void ScmSpec::validate() const {
  if (nodes.empty()) {
    throw Error(ErrorCode::schema_violation, "model has no nodes");
  }
  std::set<std::string_view> seen;
  for (const ScmNode& node : nodes) {
    if (node.id.empty()) {
      throw Error(ErrorCode::schema_violation, "node with empty id");
    }
    if (seen.contains(node.id)) schema_error(node.id, "duplicate id");
    if (node.kind == NodeKind::prior) {
      if (!node.parents.empty()) schema_error(node.id, "prior node has parents");
      if (!is_probability(node.p)) schema_error(node.id, "p outside [0, 1]");
    } else {
      if (node.parents.empty()) schema_error(node.id, "dependent node has no parents");
      if (node.theta.size() != node.parents.size()) {
        schema_error(node.id, "theta has " + std::to_string(node.theta.size()) +
                                  " weights for " +
                                  std::to_string(node.parents.size()) + " parents");
      }
      std::set<std::string_view> own;
      for (const std::string& parent : node.parents) {
        if (!seen.contains(parent)) {
          schema_error(node.id, "parent \"" + parent +
                                    "\" is unknown or does not precede it");
        }
        if (!own.insert(parent).second) {
          schema_error(node.id, "parent \"" + parent + "\" listed twice");
        }
      }
      double sum = 0.0;
      for (double t : node.theta) {
        if (!std::isfinite(t) || t < 0.0) schema_error(node.id, "negative theta");
        sum += t;
      }
      if (std::abs(sum - 1.0) > kThetaSumTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "theta sums to " << sum << ", not 1";
        schema_error(node.id, os.str());
      }
      if (!is_probability(node.q)) schema_error(node.id, "q outside [0, 1]");
    }
    seen.insert(node.id);
  }
}

std::vector<std::vector<std::size_t>> ScmSpec::parent_indices() const {
  std::vector<std::vector<std::size_t>> out(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const std::string& parent : nodes[i].parents) {
      out[i].push_back(index_of(parent));
    }
  }
  return out;
}

bool threshold_output(const std::vector<double>& theta,
                      const std::vector<bool>& parent_values) noexcept {
  double sum = 0.0;
  for (std::size_t k = 0; k < theta.size() && k < parent_values.size(); ++k) {
    if (parent_values[k]) sum += theta[k];
  }
  return sum > 0.5;
}

void BenchQuery::validate(const ScmSpec& scm) const {
  for (const auto& [id, value] : evidence) scm.index_of(id);
  for (const auto& [id, value] : interventions) scm.index_of(id);
  if (target.empty()) {
    throw Error(ErrorCode::schema_violation, "query: missing predict target");
  }
  scm.index_of(target);
  if (do_type == DoType::interventional) {
    for (const auto& [id, value] : interventions) {
      if (evidence.contains(id)) {
        throw Error(ErrorCode::already_intervened,
                    "query: \"" + id + "\" is both observed and intervened with type IV");
      }
    }
  }
}

ScmSpec generate_scm(RandomStream& rng, const GeneratorConfig& config) {
  if (config.n_blocks < 2) {
    throw Error(ErrorCode::invalid_parameter, "n_blocks must be at least 2");
  }
  ScmSpec scm;
  scm.nodes.reserve(config.n_blocks);
  for (std::size_t j = 0; j < config.n_blocks; ++j) {
    ScmNode node;
    node.id = "N" + std::to_string(j);
    std::vector<std::size_t> parents;
    for (std::size_t k = 0; k < j; ++k) {
      if (rng.uniform() < config.edge_density) parents.push_back(k);
    }
    if (parents.size() > config.max_parents) {
      // Uniform subset by partial Fisher-Yates, then restore order.
      for (std::size_t i = 0; i < config.max_parents; ++i) {
        const std::size_t pick = i + rng.below(parents.size() - i);
        std::swap(parents[i], parents[pick]);
      }
      parents.resize(config.max_parents);
      std::sort(parents.begin(), parents.end());
    }
    if (parents.empty()) {
      node.kind = NodeKind::prior;
      node.p = rng.uniform(config.param_lo, config.param_hi);
    } else {
      node.kind = NodeKind::dependent;
      double sum = 0.0;
      for (std::size_t k : parents) {
        node.parents.push_back(scm.nodes[k].id);
        node.theta.push_back(rng.beta(config.theta_a, config.theta_b));
        sum += node.theta.back();
      }
      for (double& t : node.theta) t /= sum;
      node.q = rng.uniform(config.param_lo, config.param_hi);
    }
    scm.nodes.push_back(std::move(node));
  }
  return scm;
}

std::vector<std::size_t> descendants(const ScmSpec& scm, std::size_t index) {
  const auto parents = scm.parent_indices();
  std::vector<char> reached(scm.nodes.size(), 0);
  reached[index] = 1;
  std::vector<std::size_t> out;
  for (std::size_t j = index + 1; j < scm.nodes.size(); ++j) {
    for (std::size_t p : parents[j]) {
      if (reached[p]) {
        reached[j] = 1;
        out.push_back(j);
        break;
      }
    }
  }
  return out;
}

bool has_directed_path(const ScmSpec& scm, std::string_view from,
                       std::string_view to) {
  const std::size_t a = scm.index_of(from);
  const std::size_t b = scm.index_of(to);
  const auto d = descendants(scm, a);
  return std::find(d.begin(), d.end(), b) != d.end();
}

BenchQuery generate_query(const ScmSpec& scm, RandomStream& rng,
                          const GeneratorConfig& config) {
  const std::size_t n = scm.nodes.size();
  if (n < 3) {
    throw Error(ErrorCode::degenerate_graph, "degenerate graph: fewer than 3 nodes");
  }
  BenchQuery query;
  for (int attempt = 0; query.evidence.empty(); ++attempt) {
    if (attempt == kMaxEvidenceAttempts) {
      throw Error(ErrorCode::degenerate_graph, "degenerate graph: empty evidence");
    }
    for (const ScmNode& node : scm.nodes) {
      if (rng.uniform() < config.evidence_rate) {
        query.evidence[node.id] = rng.bernoulli(0.5);
      }
    }
  }

  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> candidates;
  for (std::size_t d = 0; d < n; ++d) {
    std::vector<std::size_t> targets;
    for (std::size_t k : descendants(scm, d)) {
      if (k >= 2) targets.push_back(k);
    }
    if (!targets.empty()) candidates.emplace_back(d, std::move(targets));
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::degenerate_graph,
                "degenerate graph: no intervention node reaches an admissible target");
  }
  const auto& [d, targets] = candidates[rng.below(candidates.size())];
  const std::size_t k = targets[rng.below(targets.size())];
  const std::string& d_id = scm.nodes[d].id;
  bool value = rng.bernoulli(0.5);
  if (auto it = query.evidence.find(d_id); it != query.evidence.end()) {
    value = !it->second;
  }
  query.interventions[d_id] = value;
  query.do_type = DoType::counterfactual;
  query.target = scm.nodes[k].id;
  return query;
}

std::string check_generated(const ScmSpec& scm, const GeneratorConfig& config) {
  try {
    scm.validate();
  } catch (const Error& e) {
    return e.what();
  }
  if (scm.nodes.size() != config.n_blocks) {
    return "expected " + std::to_string(config.n_blocks) + " blocks, got " +
           std::to_string(scm.nodes.size());
  }
  for (const ScmNode& node : scm.nodes) {
    const double x = node.kind == NodeKind::prior ? node.p : node.q;
    if (x < config.param_lo || x > config.param_hi) {
      return "node \"" + node.id + "\": parameter outside generator range";
    }
    if (node.parents.size() > config.max_parents) {
      return "node \"" + node.id + "\": too many parents";
    }
  }
  if (scm.nodes.front().kind != NodeKind::prior) return "first node is not a prior node";
  return {};
}

namespace {

struct CompiledScm {
  std::vector<Address> address;
  std::vector<std::vector<std::size_t>> parents;
  std::vector<std::vector<Address>> parent_address;
  std::vector<ScmNode> nodes;
  std::vector<std::pair<std::size_t, bool>> evidence;
  std::vector<std::pair<std::size_t, bool>> interventions;
  DoType do_type = DoType::counterfactual;
  std::size_t target = 0;
  std::string label;
};

class ScmRunner {
 public:
  ScmRunner(const CompiledScm& model, Context& ctx) : m_(model), ctx_(ctx) {}

  ErpRef compute(std::size_t i) {
    return ctx_.compute_if_necessary(m_.address[i], [&] {
      const ScmNode& node = m_.nodes[i];
      if (node.kind == NodeKind::prior) {
        return ctx_.sample(observable_bernoulli(false, node.p), m_.address[i].key());
      }
      std::vector<bool> values;
      values.reserve(m_.parents[i].size());
      for (std::size_t p : m_.parents[i]) values.push_back(compute(p).boolean());
      return ctx_.sample(observable_bernoulli(threshold_output(node.theta, values), node.q)
                             .depends_on(m_.parent_address[i]),
                         m_.address[i].key());
    });
  }

  void run() {
    if (ctx_.mode() == Mode::eager) {
      for (std::size_t i = 0; i < m_.nodes.size(); ++i) compute(i);
    }
    if (ctx_.if_observe_block()) {
      for (const auto& [i, v] : m_.evidence) ctx_.observe(compute(i), v);
    }
    if (ctx_.if_do_block()) {
      for (const auto& [i, v] : m_.interventions) ctx_.do_(compute(i), v, m_.do_type);
    }
    ctx_.predict(m_.label, compute(m_.target).value(),
                 m_.do_type == DoType::counterfactual);
  }

 private:
  const CompiledScm& m_;
  Context& ctx_;
};

}  // namespace

Program make_scm_program(const ScmSpec& scm, const BenchQuery& query,
                         std::string label) {
  scm.validate();
  query.validate(scm);
  auto model = std::make_shared<CompiledScm>();
  model->nodes = scm.nodes;
  model->parents = scm.parent_indices();
  for (std::size_t i = 0; i < scm.nodes.size(); ++i) {
    model->address.emplace_back(scm.nodes[i].id);
    std::vector<Address> pa;
    for (std::size_t p : model->parents[i]) pa.emplace_back(scm.nodes[p].id);
    model->parent_address.push_back(std::move(pa));
  }
  for (const auto& [id, v] : query.evidence) {
    model->evidence.emplace_back(scm.index_of(id), v);
  }
  for (const auto& [id, v] : query.interventions) {
    model->interventions.emplace_back(scm.index_of(id), v);
  }
  model->do_type = query.do_type;
  model->target = scm.index_of(query.target);
  model->label = std::move(label);
  return [model = std::shared_ptr<const CompiledScm>(std::move(model))](Context& ctx) {
    ScmRunner(*model, ctx).run();
  };
}

}  // namespace twinworld
