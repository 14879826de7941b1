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

#include <map>
#include <string>
#include <vector>

#include "twinworld/engine.hpp"
#include "twinworld/scm.hpp"

namespace twinworld {

/// One joint assignment of the exogenous variables. Keys are node ids; the
/// value is the node's own exogenous draw (the prior value for prior nodes,
/// the flip noise for dependent nodes).
struct DiscreteWorld {
  std::map<std::string, bool> assignment;
  double probability = 0.0;
};

inline constexpr std::size_t kMaxEnumeratedVariables = 25;

/// Posterior over exogenous worlds given evidence on node values. Worlds
/// inconsistent with the evidence are omitted. Throws
/// Error(impossible_evidence) if the evidence has probability zero.
std::vector<DiscreteWorld> enumerate_posterior(
    const ScmSpec& scm, const std::map<std::string, bool>& evidence);

/// P(target = 1) in the world obtained by abduction on `evidence`, forcing
/// `interventions` and recomputing every endogenous value with the
/// exogenous values held fixed. With DoType::interventional the evidence is
/// conditioned in the already-intervened model instead.
double exact_counterfactual(const ScmSpec& scm,
                            const std::map<std::string, bool>& evidence,
                            const std::map<std::string, bool>& interventions,
                            const std::string& target,
                            DoType type = DoType::counterfactual);

double exact_counterfactual(const ScmSpec& scm, const BenchQuery& query);

}  // namespace twinworld
