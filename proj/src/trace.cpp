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

#include "twinworld/trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "twinworld/error.hpp"

namespace twinworld {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::latent: return "latent";
    case Role::observed: return "observed";
    case Role::intervened: return "intervened";
  }
  return "?";
}

double weight_contribution(const TraceEntry& entry) noexcept {
  switch (entry.role) {
    case Role::intervened: return 0.0;
    case Role::observed: return entry.log_prior;
    case Role::latent:
      if (entry.log_prior == kNegInf) return kNegInf;
      return entry.log_prior - entry.log_proposal;
  }
  return 0.0;
}

Address Trace::fresh_address(std::optional<std::string_view> user_key) {
  if (user_key) {
    Address address(*user_key);
    if (index_.contains(address.key())) {
      throw Error(ErrorCode::address_collision,
                  "address collision at \"" + address.key() + "\"");
    }
    return address;
  }
  Address address("auto:" + std::to_string(auto_counter_++));
  if (index_.contains(address.key())) {
    throw Error(ErrorCode::address_collision,
                "address collision at \"" + address.key() + "\"");
  }
  return address;
}

const TraceEntry& Trace::record(TraceEntry entry) {
  for (const Address& parent : entry.parents) {
    if (!index_.contains(parent.key())) {
      throw Error(ErrorCode::invalid_query,
                  "parent \"" + parent.key() + "\" of \"" +
                      entry.address.key() + "\" is not recorded in the trace");
    }
  }
  auto [it, inserted] = index_.emplace(entry.address.key(), entries_.size());
  if (!inserted) {
    throw Error(ErrorCode::address_collision,
                "address collision at \"" + entry.address.key() + "\"");
  }
  accumulate(weight_contribution(entry));
  entries_.push_back(std::move(entry));
  return entries_.back();
}

const TraceEntry* Trace::find(const Address& address) const noexcept {
  auto it = index_.find(address.key());
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::optional<std::size_t> Trace::index_of(const Address& address) const noexcept {
  auto it = index_.find(address.key());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Trace::accumulate(double delta_log) {
  if (std::isnan(delta_log) || delta_log == -kNegInf) {
    throw Error(ErrorCode::invalid_weight_increment, "invalid weight increment");
  }
  if (log_weight_ == kNegInf) return;
  log_weight_ += delta_log;
}

double Trace::recompute_log_weight() const noexcept {
  std::vector<std::pair<const std::string*, double>> terms;
  for (const TraceEntry& e : entries_) {
    const double c = weight_contribution(e);
    if (c == kNegInf) return kNegInf;
    if (c != 0.0) terms.emplace_back(&e.address.key(), c);
  }
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return *a.first < *b.first; });
  double total = 0.0;
  for (const auto& term : terms) total += term.second;
  return total;
}

bool Trace::rejected() const noexcept { return log_weight_ == kNegInf; }

void Trace::add_prediction(std::string label, Value value) {
  predictions_.emplace_back(std::move(label), std::move(value));
}

Trace& weight_accumulate(Trace& trace, double delta_log) {
  trace.accumulate(delta_log);
  return trace;
}

double log_add(double a, double b) noexcept {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace twinworld
