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

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "twinworld/engine.hpp"
#include "twinworld/random.hpp"

namespace twinworld {

enum class NodeKind { prior, dependent };

/// One block of a binary benchmark SCM.
///
/// A prior node is an exogenous Bernoulli(p). A dependent node outputs
/// f xor eps with f = 1[sum_k theta_k * x_parent_k > 0.5] and
/// eps ~ Bernoulli(q).
struct ScmNode {
  std::string id;
  NodeKind kind = NodeKind::prior;
  double p = 0.5;
  std::vector<std::string> parents;
  std::vector<double> theta;
  double q = 0.5;
};

struct ScmSpec {
  std::vector<ScmNode> nodes;  // topological order

  /// Throws Error(unknown_node).
  std::size_t index_of(std::string_view id) const;
  const ScmNode& node(std::string_view id) const {
    return nodes[index_of(id)];
  }

  /// Structural checks shared by files and generated models: unique ids,
  /// parents precede children, theta has one unit-normalized weight per
  /// parent, probabilities in [0, 1]. Throws Error(schema_violation) naming
  /// the offending node.
  void validate() const;

  /// Parent indices of every node, resolved once.
  std::vector<std::vector<std::size_t>> parent_indices() const;
};

/// Deterministic part of a dependent node given its parents' values.
bool threshold_output(const std::vector<double>& theta,
                      const std::vector<bool>& parent_values) noexcept;

struct BenchQuery {
  std::map<std::string, bool> evidence;
  std::map<std::string, bool> interventions;
  DoType do_type = DoType::counterfactual;
  std::string target;

  void validate(const ScmSpec& scm) const;
};

struct GeneratorConfig {
  std::size_t n_blocks = 15;
  double edge_density = 0.3;
  std::size_t max_parents = 4;
  double evidence_rate = 0.3;
  double param_lo = 0.3;  // range of p and q
  double param_hi = 0.7;
  double theta_a = 5.0;  // theta_k ~ Beta(a, b) before normalization
  double theta_b = 5.0;
};

/// Random SCM in the style of randomDAG: node j includes each predecessor
/// as a parent with probability edge_density (at most max_parents, chosen
/// uniformly); nodes left without parents are prior nodes. Node 0 is always
/// a prior node.
ScmSpec generate_scm(RandomStream& rng, const GeneratorConfig& config = {});

/// Evidence by independent inclusion at evidence_rate (redrawn if empty),
/// an intervention node with a reachable admissible target, and a target
/// among its descendants outside the first two nodes. The intervened value
/// flips the evidence value when the node is observed. Throws
/// Error(degenerate_graph) when no intervention/target pair exists.
BenchQuery generate_query(const ScmSpec& scm, RandomStream& rng,
                          const GeneratorConfig& config = {});

/// True iff a directed path of length >= 1 leads from `from` to `to`.
bool has_directed_path(const ScmSpec& scm, std::string_view from,
                       std::string_view to);

/// Indices of all strict descendants of node `index`.
std::vector<std::size_t> descendants(const ScmSpec& scm, std::size_t index);

/// Checks the generator's invariants on top of validate(): p, q and the
/// block count. Returns an empty string when all hold, else a diagnostic.
std::string check_generated(const ScmSpec& scm, const GeneratorConfig& config);

/// The SCM as a probabilistic program. Every node is an
/// ObservableBernoulli at address <id> with its exogenous noise at
/// <id>/noise (prior nodes use f = false and flip probability p). In eager
/// mode all nodes are evaluated in topological order; in lazy mode only the
/// ancestors of observed, intervened and predicted nodes are, through
/// compute_if_necessary. The target is predicted under `label`.
Program make_scm_program(const ScmSpec& scm, const BenchQuery& query,
                         std::string label = "target");

}  // namespace twinworld
