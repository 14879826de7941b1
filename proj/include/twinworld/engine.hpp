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
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twinworld/distributions.hpp"
#include "twinworld/error.hpp"
#include "twinworld/trace.hpp"
#include "twinworld/value.hpp"

namespace twinworld {

enum class Phase {
  discovery,  // records observe/do/predict statements
  abduction,  // absorbs evidence, ignores counterfactual interventions
  replay,     // reuses abducted values, forces counterfactual interventions
  probe,      // forward run used by the dependency audit
};

enum class Mode { eager, lazy };

enum class DoType {
  counterfactual,   // forced only in the replayed world
  interventional,   // model surgery, forced in every phase
};

std::string_view to_string(Phase phase) noexcept;
std::string_view to_string(Mode mode) noexcept;
std::string_view to_string(DoType type) noexcept;

struct Intervention {
  Value value;
  DoType type = DoType::counterfactual;
};

struct PredictTarget {
  std::string label;
  bool counterfactual = true;
};

struct Query {
  std::map<Address, Value> evidence;
  std::map<Address, Intervention> interventions;
  std::vector<PredictTarget> predict_targets;

  bool has_counterfactual_interventions() const noexcept;
  /// Replay runs when there is a counterfactual intervention or a
  /// counterfactual prediction to record.
  bool needs_replay() const noexcept;

  const Value* evidence_at(const Address& address) const noexcept;
  const Intervention* intervention_at(const Address& address) const noexcept;
};

struct EngineOptions {
  Mode mode = Mode::eager;
  /// Absolute tolerance for Real-valued Delta observations; 0 is exact.
  double delta_tolerance = 0.0;
  /// When set, plain stochastic descendants of an intervention are redrawn
  /// from their priors during replay instead of raising implicit_noise.
  bool resample_implicit_noise = false;
};

/// Handle to a realized random choice of the current execution.
class ErpRef {
 public:
  ErpRef(Address address, Value value)
      : address_(std::move(address)), value_(std::move(value)) {}

  const Address& address() const noexcept { return address_; }
  const Value& value() const noexcept { return value_; }
  double real() const { return value_.as_real(); }
  bool boolean() const { return value_.as_bool(); }

  operator Address() const { return address_; }  // NOLINT: used by depends_on

 private:
  Address address_;
  Value value_;
};

/// Execution context handed to a program. One context serves exactly one
/// execution and is never shared between threads.
class Context {
 public:
  Context(Phase phase, const Query* query, const Trace* abducted,
          std::uint64_t seed, std::uint64_t sample_index,
          const EngineOptions& options);

  /// Instantiates an ERP at `key` (or the next auto address) and returns its
  /// realized value for this phase.
  ErpRef sample(ErpSpec spec, std::optional<std::string_view> key = {});

  void observe(const ErpRef& erp, const Value& value);
  void do_(const ErpRef& erp, const Value& value,
           DoType type = DoType::counterfactual);
  void predict(std::string label, const Value& value,
               bool counterfactual = true);

  /// Lazy gate. Returns the memoized choice at `address` if this execution
  /// already produced it; in lazy mode returns the forced value of an
  /// active intervention without calling `thunk`; otherwise calls `thunk`,
  /// which must instantiate the ERP at `address`.
  template <typename Thunk>
  ErpRef compute_if_necessary(const Address& address, Thunk&& thunk) {
    if (auto memo = memoized(address)) return *std::move(memo);
    if (auto forced = short_circuit(address)) return *std::move(forced);
    ErpRef ref = std::forward<Thunk>(thunk)();
    check_thunk_address(address, ref);
    return ref;
  }

  /// True in phases that absorb evidence (always in eager mode).
  bool if_observe_block() const noexcept;
  /// True in phases that must record interventions (always in eager mode).
  bool if_do_block() const noexcept;

  Phase phase() const noexcept { return phase_; }
  Mode mode() const noexcept { return options_.mode; }
  std::uint64_t sample_index() const noexcept { return sample_index_; }

  const Trace& trace() const noexcept { return trace_; }
  Trace take_trace() && { return std::move(trace_); }
  Query take_discovered() && { return std::move(discovered_); }

 private:
  std::optional<ErpRef> memoized(const Address& address) const;
  std::optional<ErpRef> short_circuit(const Address& address);
  void check_thunk_address(const Address& expected, const ErpRef& got) const;

  const Intervention* active_intervention(const Address& address) const;
  bool any_dirty_parent(const std::vector<Address>& parents) const;
  void push(TraceEntry entry, bool dirty);

  ErpRef record_forced(const Address& address, const Value& value,
                       Family family, std::vector<Address> parents);
  ErpRef forward(const Address& address, ErpSpec& spec, StreamPurpose purpose,
                 bool dirty);
  ErpRef absorb(const Address& address, ErpSpec& spec, const Value& observed);
  ErpRef replay_choice(const Address& address, ErpSpec& spec);

  Phase phase_;
  const Query* query_;
  const Trace* abducted_;
  std::uint64_t seed_;
  std::uint64_t sample_index_;
  EngineOptions options_;

  Trace trace_;
  std::vector<char> dirty_;  // parallel to trace_ entries
  bool intervention_applied_ = false;
  Query discovered_;
};

using Program = std::function<void(Context&)>;

/// Predicted values and weights of every sample, in sample order.
struct InferenceResult {
  std::vector<std::string> labels;
  std::vector<std::vector<Value>> predictions;  // [sample][label]
  std::vector<double> log_weights;
  std::size_t n_samples = 0;
  std::size_t n_rejected = 0;
  double wall_seconds = 0.0;
  bool degenerate = false;  // every sample rejected
  std::size_t program_evaluations = 0;
  Query query;
  /// Abducted and (when replay ran) replayed traces; only filled when
  /// RunOptions::keep_traces is set.
  std::vector<std::pair<Trace, std::optional<Trace>>> traces;

  std::size_t label_index(std::string_view label) const;
};

struct RunOptions {
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  EngineOptions engine;
  bool keep_traces = false;
  /// Run audit_dependencies on a few executions before sampling and throw
  /// on the first violation.
  bool audit_dependencies = false;
};

/// Runs the program once to record observed, intervened and predicted
/// addresses. Validates the resulting query.
Query discover(const Program& program, const EngineOptions& options = {},
               std::uint64_t seed = 0);

/// One execution with evidence absorbed and counterfactual interventions
/// ignored. The log weight is settled in address order.
Trace abduction_sample(const Program& program, const Query& query,
                       std::uint64_t seed, std::uint64_t sample_index,
                       const EngineOptions& options = {});

/// Re-executes the program in the counterfactual world of `abducted`.
/// Non-descendants of interventions keep their abducted values, forced
/// addresses take the intervened value and descendants are recomputed. The
/// log weight is copied unchanged.
Trace counterfactual_replay(const Trace& abducted, const Query& query,
                            const Program& program, std::uint64_t seed,
                            std::uint64_t sample_index,
                            const EngineOptions& options = {});

/// Discovery, then N abductions and (if needed) N replays spread across
/// `workers` threads. Output depends only on (program, seed, n_samples).
InferenceResult run_inference(const Program& program, const RunOptions& options);

/// Self-normalized importance sampling estimate of E[label]. Throws
/// Error(no_surviving_samples) when every weight is -inf.
double estimate_expectation(const InferenceResult& result,
                            std::string_view label);
double estimate_expectation(std::span<const double> values,
                            std::span<const double> log_weights);

/// (sum w)^2 / sum w^2 evaluated from log weights. 0 if all are -inf.
double ess(std::span<const double> log_weights);

struct DependencyViolation {
  Address perturbed;
  Address changed;
};

/// Perturb-and-compare check of declared dependencies: every latent choice
/// of a forward run is forced to a different value, and any other choice
/// whose value then changes must be a declared descendant of it.
std::vector<DependencyViolation> audit_dependencies(
    const Program& program, std::uint64_t seed, std::size_t n_executions,
    const EngineOptions& options = {});

}  // namespace twinworld
