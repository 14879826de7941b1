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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "twinworld/distributions.hpp"
#include "twinworld/value.hpp"

namespace twinworld {

enum class Role { latent, observed, intervened };

std::string_view to_string(Role role) noexcept;

struct TraceEntry {
  Address address;
  Value value;
  double log_prior = 0.0;     // nats
  double log_proposal = 0.0;  // nats
  Role role = Role::latent;
  Family family = Family::delta;
  std::vector<Address> parents;
  double residual = 0.0;  // low-order part of an inverted Real noise
};

/// What an entry adds to the sample's log weight: latents add
/// log_prior - log_proposal, observed entries their log likelihood
/// (stored in log_prior) and intervened entries nothing.
double weight_contribution(const TraceEntry& entry) noexcept;

/// The ordered record of one program execution.
///
/// A trace also owns the auto-address counter of the execution that fills
/// it, so addresses are unique per trace and replay with identical control
/// flow reproduces the same address sequence.
class Trace {
 public:
  Trace() = default;

  /// Next address: `user_key` if given, else "auto:<n>" with n counting
  /// auto-addressed choices from 0. Throws Error(address_collision) if the
  /// key is already recorded.
  Address fresh_address(std::optional<std::string_view> user_key = {});

  /// Appends an entry and folds its contribution into the log weight.
  /// Parents must already be recorded. Throws on duplicate addresses.
  const TraceEntry& record(TraceEntry entry);

  const TraceEntry* find(const Address& address) const noexcept;
  std::optional<std::size_t> index_of(const Address& address) const noexcept;
  bool contains(const Address& address) const noexcept {
    return find(address) != nullptr;
  }

  const std::vector<TraceEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  double log_weight() const noexcept { return log_weight_; }
  void set_log_weight(double w) noexcept { log_weight_ = w; }

  /// Adds `delta_log` to the log weight. -inf is absorbing. Throws
  /// Error(invalid_weight_increment) for NaN or +inf.
  void accumulate(double delta_log);

  /// Sum of entry contributions taken in address order. Independent of the
  /// order in which the program happened to evaluate its choices.
  double recompute_log_weight() const noexcept;

  bool rejected() const noexcept;

  const std::vector<std::pair<std::string, Value>>& predictions()
      const noexcept {
    return predictions_;
  }
  void add_prediction(std::string label, Value value);

  std::uint64_t auto_counter() const noexcept { return auto_counter_; }

 private:
  std::vector<TraceEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::pair<std::string, Value>> predictions_;
  double log_weight_ = 0.0;
  std::uint64_t auto_counter_ = 0;
};

/// Free-function form of Trace::accumulate.
Trace& weight_accumulate(Trace& trace, double delta_log);

/// Log of the sum of exponentials of `a` and `b`, handling -inf.
double log_add(double a, double b) noexcept;

}  // namespace twinworld
