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

#include "twinworld/exact.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "twinworld/error.hpp"

namespace twinworld {

namespace {

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

constexpr std::int8_t kFree = -1;

class Enumerator {
 public:
  explicit Enumerator(const ScmSpec& scm) : scm_(scm), parents_(scm.parent_indices()) {
    scm.validate();
    if (scm.nodes.size() > kMaxEnumeratedVariables) {
      throw Error(ErrorCode::invalid_parameter,
                  "exact enumeration supports at most " +
                      std::to_string(kMaxEnumeratedVariables) + " exogenous variables");
    }
  }

  std::size_t size() const noexcept { return scm_.nodes.size(); }
  std::uint64_t world_count() const noexcept { return std::uint64_t{1} << size(); }

  std::vector<std::int8_t> pins(const std::map<std::string, bool>& assignment) const {
    std::vector<std::int8_t> out(size(), kFree);
    for (const auto& [id, v] : assignment) out[scm_.index_of(id)] = v ? 1 : 0;
    return out;
  }

  double prior(std::uint64_t world) const noexcept {
    double prob = 1.0;
    for (std::size_t i = 0; i < size(); ++i) {
      const ScmNode& node = scm_.nodes[i];
      const double on = node.kind == NodeKind::prior ? node.p : node.q;
      prob *= (world >> i) & 1U ? on : 1.0 - on;
    }
    return prob;
  }

  /// Node values in `world` with `forced` nodes overriding their mechanism.
  void evaluate(std::uint64_t world, const std::vector<std::int8_t>& forced,
                std::vector<bool>& values) const {
    values.assign(size(), false);
    std::vector<bool> pv;
    for (std::size_t i = 0; i < size(); ++i) {
      if (forced[i] != kFree) {
        values[i] = forced[i] == 1;
        continue;
      }
      const bool u = (world >> i) & 1U;
      const ScmNode& node = scm_.nodes[i];
      if (node.kind == NodeKind::prior) {
        values[i] = u;
      } else {
        pv.clear();
        for (std::size_t p : parents_[i]) pv.push_back(values[p]);
        values[i] = threshold_output(node.theta, pv) != u;
      }
    }
  }

  static bool consistent(const std::vector<bool>& values,
                         const std::vector<std::int8_t>& evidence) noexcept {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (evidence[i] != kFree && values[i] != (evidence[i] == 1)) return false;
    }
    return true;
  }

 private:
  const ScmSpec& scm_;
  std::vector<std::vector<std::size_t>> parents_;
};

}  // namespace

std::vector<DiscreteWorld> enumerate_posterior(
    const ScmSpec& scm, const std::map<std::string, bool>& evidence) {
  const Enumerator en(scm);
  const auto ev = en.pins(evidence);
  const std::vector<std::int8_t> none(en.size(), kFree);
  std::vector<DiscreteWorld> worlds;
  std::vector<bool> values;
  CompensatedSum total;
  for (std::uint64_t w = 0; w < en.world_count(); ++w) {
    en.evaluate(w, none, values);
    if (!Enumerator::consistent(values, ev)) continue;
    const double prob = en.prior(w);
    if (prob == 0.0) continue;
    DiscreteWorld world;
    for (std::size_t i = 0; i < en.size(); ++i) {
      world.assignment[scm.nodes[i].id] = (w >> i) & 1U;
    }
    world.probability = prob;
    total.add(prob);
    worlds.push_back(std::move(world));
  }
  const double z = total.value();
  if (z <= 0.0) throw Error(ErrorCode::impossible_evidence, "impossible evidence");
  for (DiscreteWorld& world : worlds) world.probability /= z;
  return worlds;
}

double exact_counterfactual(const ScmSpec& scm,
                            const std::map<std::string, bool>& evidence,
                            const std::map<std::string, bool>& interventions,
                            const std::string& target, DoType type) {
  const Enumerator en(scm);
  const auto ev = en.pins(evidence);
  const auto forced = en.pins(interventions);
  const std::size_t k = scm.index_of(target);
  const std::vector<std::int8_t> none(en.size(), kFree);
  const auto& factual_forcing = type == DoType::interventional ? forced : none;

  CompensatedSum total;
  CompensatedSum hit;
  std::vector<bool> factual;
  std::vector<bool> twin;
  for (std::uint64_t w = 0; w < en.world_count(); ++w) {
    en.evaluate(w, factual_forcing, factual);
    if (!Enumerator::consistent(factual, ev)) continue;
    const double prob = en.prior(w);
    total.add(prob);
    if (type == DoType::interventional) {
      if (factual[k]) hit.add(prob);
    } else {
      en.evaluate(w, forced, twin);
      if (twin[k]) hit.add(prob);
    }
  }
  const double z = total.value();
  if (z <= 0.0) throw Error(ErrorCode::impossible_evidence, "impossible evidence");
  return std::min(1.0, hit.value() / z);
}

double exact_counterfactual(const ScmSpec& scm, const BenchQuery& query) {
  return exact_counterfactual(scm, query.evidence, query.interventions,
                              query.target, query.do_type);
}

}  // namespace twinworld
