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

#include "twinworld/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace twinworld {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Sample index reserved for the discovery pass.
constexpr std::uint64_t kDiscoveryIndex = std::numeric_limits<std::uint64_t>::max();
constexpr std::size_t kChunk = 64;

Address noise_address(const Address& address) {
  return Address(address.key() + "/noise");
}

bool value_fits(Family family, const Value& v) {
  switch (family) {
    case Family::normal:
    case Family::uniform_continuous:
    case Family::beta:
    case Family::observable_normal:
      return v.is_real();
    case Family::bernoulli:
    case Family::observable_bernoulli:
    case Family::observable_noisy_or:
      return v.is_bool();
    case Family::delta:
      return true;
  }
  return false;
}

void require_fit(Family family, const Value& v, const Address& address) {
  if (!value_fits(family, v)) {
    throw Error(ErrorCode::type_mismatch,
                "value " + v.to_string() + " does not fit " +
                    std::string(to_string(family)) + " at \"" + address.key() +
                    "\"");
  }
}

template <typename Fn>
void run_guarded(std::uint64_t sample_index, Fn&& fn) {
  try {
    fn();
  } catch (const SampleError&) {
    throw;
  } catch (const Error& e) {
    throw SampleError(e.code(), sample_index, e.what());
  } catch (const std::exception& e) {
    throw SampleError(ErrorCode::program_error, sample_index, e.what());
  }
}

Trace execute(const Program& program, Phase phase, const Query* query,
              const Trace* abducted, std::uint64_t seed,
              std::uint64_t sample_index, const EngineOptions& options) {
  Context ctx(phase, query, abducted, seed, sample_index, options);
  run_guarded(sample_index, [&] { program(ctx); });
  return std::move(ctx).take_trace();
}

}  // namespace

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::discovery: return "discovery";
    case Phase::abduction: return "abduction";
    case Phase::replay: return "replay";
    case Phase::probe: return "probe";
  }
  return "?";
}

std::string_view to_string(Mode mode) noexcept {
  return mode == Mode::eager ? "eager" : "lazy";
}

std::string_view to_string(DoType type) noexcept {
  return type == DoType::counterfactual ? "CF" : "IV";
}

bool Query::has_counterfactual_interventions() const noexcept {
  return std::any_of(interventions.begin(), interventions.end(), [](const auto& kv) {
    return kv.second.type == DoType::counterfactual;
  });
}

bool Query::needs_replay() const noexcept {
  return has_counterfactual_interventions() ||
         std::any_of(predict_targets.begin(), predict_targets.end(),
                     [](const PredictTarget& t) { return t.counterfactual; });
}

const Value* Query::evidence_at(const Address& address) const noexcept {
  if (evidence.empty()) return nullptr;
  auto it = evidence.find(address);
  return it == evidence.end() ? nullptr : &it->second;
}

const Intervention* Query::intervention_at(const Address& address) const noexcept {
  if (interventions.empty()) return nullptr;
  auto it = interventions.find(address);
  return it == interventions.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Context

Context::Context(Phase phase, const Query* query, const Trace* abducted,
                 std::uint64_t seed, std::uint64_t sample_index,
                 const EngineOptions& options)
    : phase_(phase),
      query_(query),
      abducted_(abducted),
      seed_(seed),
      sample_index_(sample_index),
      options_(options) {}

const Intervention* Context::active_intervention(const Address& address) const {
  if (query_ == nullptr) return nullptr;
  const Intervention* iv = query_->intervention_at(address);
  if (iv == nullptr) return nullptr;
  if (iv->type == DoType::interventional) return iv;
  return phase_ == Phase::replay ? iv : nullptr;
}

bool Context::any_dirty_parent(const std::vector<Address>& parents) const {
  for (const Address& parent : parents) {
    const auto idx = trace_.index_of(parent);
    if (!idx) {
      throw Error(ErrorCode::invalid_query,
                  "depends_on names \"" + parent.key() +
                      "\", which this execution has not produced");
    }
    if (dirty_[*idx]) return true;
  }
  return false;
}

void Context::push(TraceEntry entry, bool dirty) {
  trace_.record(std::move(entry));
  dirty_.push_back(dirty ? 1 : 0);
}

ErpRef Context::sample(ErpSpec spec, std::optional<std::string_view> key) {
  Address address = trace_.fresh_address(key);
  spec.validate();
  if (const Intervention* iv = active_intervention(address)) {
    return record_forced(address, iv->value, spec.family(), {});
  }
  switch (phase_) {
    case Phase::discovery:
      return forward(address, spec, StreamPurpose::discovery, false);
    case Phase::probe:
      return forward(address, spec, StreamPurpose::abduction, false);
    case Phase::abduction:
      if (query_ != nullptr) {
        if (const Value* observed = query_->evidence_at(address)) {
          return absorb(address, spec, *observed);
        }
      }
      return forward(address, spec, StreamPurpose::abduction, false);
    case Phase::replay:
      return replay_choice(address, spec);
  }
  return ErpRef(address, Value());
}

ErpRef Context::record_forced(const Address& address, const Value& value,
                              Family family, std::vector<Address> parents) {
  require_fit(family, value, address);
  TraceEntry entry;
  entry.address = address;
  entry.value = value;
  entry.role = Role::intervened;
  entry.family = family;
  entry.parents = std::move(parents);
  push(std::move(entry), true);
  intervention_applied_ = true;
  return ErpRef(address, value);
}

ErpRef Context::forward(const Address& address, ErpSpec& spec,
                        StreamPurpose purpose, bool dirty) {
  if (spec.is_observable()) {
    Address noise_addr = noise_address(address);
    RandomStream rng = rng_for_address(seed_, sample_index_, noise_addr, purpose);
    const Draw noise = sample_noise(spec, rng);
    Value out = apply_noise(spec, noise.value);
    TraceEntry n{noise_addr, noise.value, noise.log_prior, noise.log_proposal,
                 Role::latent, noise_family(spec.family()), {}};
    spec.parents.push_back(noise_addr);
    push(std::move(n), false);
    push(TraceEntry{address, out, 0.0, 0.0, Role::latent, spec.family(),
                    std::move(spec.parents)},
         dirty);
    return ErpRef(address, std::move(out));
  }
  Draw d;
  if (spec.family() == Family::delta) {
    d = {std::get<DeltaParams>(spec.params).value, 0.0, 0.0};
  } else {
    RandomStream rng = rng_for_address(seed_, sample_index_, address, purpose);
    d = sample_and_score(spec, rng);
  }
  Value out = d.value;
  push(TraceEntry{address, std::move(d.value), d.log_prior, d.log_proposal,
                  Role::latent, spec.family(), std::move(spec.parents)},
       dirty);
  return ErpRef(address, std::move(out));
}

ErpRef Context::absorb(const Address& address, ErpSpec& spec,
                       const Value& observed) {
  const Family family = spec.family();
  if (spec.is_observable()) {
    Address noise_addr = noise_address(address);
    RandomStream rng = rng_for_address(seed_, sample_index_, noise_addr,
                                       StreamPurpose::abduction);
    NoiseInversion inv = invert_observation(spec, observed, rng);
    TraceEntry n{noise_addr,
                 inv.noise_value,
                 inv.feasible ? inv.log_prior : kNegInf,
                 inv.log_proposal,
                 Role::latent,
                 noise_family(family),
                 {}};
    n.residual = inv.residual;
    spec.parents.push_back(noise_addr);
    push(std::move(n), false);
    push(TraceEntry{address, observed, 0.0, 0.0, Role::observed, family,
                    std::move(spec.parents)},
         false);
    return ErpRef(address, observed);
  }
  if (family == Family::delta) {
    const Value& v = std::get<DeltaParams>(spec.params).value;
    const double lp = log_density(spec, observed, options_.delta_tolerance);
    push(TraceEntry{address, v, lp, 0.0, Role::observed, family,
                    std::move(spec.parents)},
         false);
    return ErpRef(address, v);
  }
  if (family == Family::bernoulli && spec.parents.empty()) {
    const double lp = log_density(spec, observed);
    push(TraceEntry{address, observed, lp, 0.0, Role::observed, family, {}},
         false);
    return ErpRef(address, observed);
  }
  throw Error(ErrorCode::unobservable_procedure,
              "unobservable procedure " + std::string(to_string(family)) +
                  " at \"" + address.key() + "\"");
}

ErpRef Context::replay_choice(const Address& address, ErpSpec& spec) {
  const bool dirty = any_dirty_parent(spec.parents);
  const TraceEntry* prev = abducted_ ? abducted_->find(address) : nullptr;
  if (prev == nullptr) {
    if (!intervention_applied_) {
      throw Error(ErrorCode::stale_trace,
                  "stale trace: \"" + address.key() +
                      "\" was not produced during abduction");
    }
    // A branch opened by the intervention: draw it from the prior.
    spec.proposal.reset();
    return forward(address, spec, StreamPurpose::replay, true);
  }
  if (prev->family != spec.family()) {
    throw Error(ErrorCode::stale_trace,
                "stale trace: \"" + address.key() + "\" was " +
                    std::string(to_string(prev->family)) + " during abduction, now " +
                    std::string(to_string(spec.family())));
  }

  if (spec.is_observable()) {
    Address noise_addr = noise_address(address);
    const TraceEntry* prev_noise = abducted_->find(noise_addr);
    Value noise;
    double residual = 0.0;
    if (prev_noise != nullptr) {
      noise = prev_noise->value;
      residual = prev_noise->residual;
      push(*prev_noise, false);
    } else {
      RandomStream rng = rng_for_address(seed_, sample_index_, noise_addr,
                                         StreamPurpose::replay);
      const Draw d = sample_noise(spec, rng);
      noise = d.value;
      push(TraceEntry{noise_addr, d.value, d.log_prior, d.log_proposal,
                      Role::latent, noise_family(spec.family()), {}},
           false);
    }
    spec.parents.push_back(std::move(noise_addr));
    Value out = dirty ? apply_noise(spec, noise, residual) : prev->value;
    TraceEntry e{address, out, prev->log_prior, prev->log_proposal,
                 dirty ? Role::latent : prev->role, spec.family(),
                 std::move(spec.parents)};
    if (dirty) e.log_prior = e.log_proposal = 0.0;
    push(std::move(e), dirty);
    return ErpRef(address, std::move(out));
  }

  if (!dirty) {
    TraceEntry e = *prev;
    e.parents = std::move(spec.parents);
    push(std::move(e), false);
    return ErpRef(address, prev->value);
  }
  if (spec.family() == Family::delta) {
    Value v = std::get<DeltaParams>(spec.params).value;
    push(TraceEntry{address, v, 0.0, 0.0, Role::latent, Family::delta,
                    std::move(spec.parents)},
         true);
    return ErpRef(address, std::move(v));
  }
  if (!options_.resample_implicit_noise) {
    throw Error(ErrorCode::implicit_noise,
                std::string(to_string(spec.family())) + " at \"" +
                    address.key() +
                    "\" descends from an intervention but keeps its noise "
                    "implicit; use an observable procedure or an explicit "
                    "noise choice");
  }
  spec.proposal.reset();
  return forward(address, spec, StreamPurpose::replay, true);
}

void Context::observe(const ErpRef& erp, const Value& value) {
  const Address& address = erp.address();
  switch (phase_) {
    case Phase::discovery: {
      const TraceEntry* entry = trace_.find(address);
      if (entry == nullptr) {
        throw Error(ErrorCode::invalid_query,
                    "observe: \"" + address.key() + "\" is not in this execution");
      }
      if (const auto it = discovered_.interventions.find(address);
          it != discovered_.interventions.end() &&
          it->second.type == DoType::interventional) {
        throw Error(ErrorCode::already_intervened,
                    "cannot observe \"" + address.key() +
                        "\": it is already intervened");
      }
      switch (entry->family) {
        case Family::normal:
        case Family::uniform_continuous:
        case Family::beta:
          throw Error(ErrorCode::unobservable_procedure,
                      "unobservable procedure " +
                          std::string(to_string(entry->family)) + " at \"" +
                          address.key() + "\"");
        case Family::bernoulli:
          if (!entry->parents.empty()) {
            throw Error(ErrorCode::implicit_noise,
                        "cannot observe Bernoulli at \"" + address.key() +
                            "\": its noise given its parents is implicit");
          }
          break;
        default:
          break;
      }
      require_fit(entry->family, value, address);
      if (!discovered_.evidence.emplace(address, value).second) {
        throw Error(ErrorCode::invalid_query,
                    "\"" + address.key() + "\" is observed twice");
      }
      return;
    }
    case Phase::abduction:
      if (query_ == nullptr || query_->evidence_at(address) == nullptr) {
        throw Error(ErrorCode::invalid_query,
                    "observe: \"" + address.key() +
                        "\" was not observed during discovery");
      }
      return;
    case Phase::replay:
    case Phase::probe:
      return;
  }
}

void Context::do_(const ErpRef& erp, const Value& value, DoType type) {
  const Address& address = erp.address();
  if (phase_ != Phase::discovery) {
    if (phase_ == Phase::probe) return;
    if (query_ == nullptr || query_->intervention_at(address) == nullptr) {
      throw Error(ErrorCode::invalid_query,
                  "do: \"" + address.key() +
                      "\" was not intervened during discovery");
    }
    return;
  }
  const TraceEntry* entry = trace_.find(address);
  if (entry == nullptr) {
    throw Error(ErrorCode::invalid_query,
                "do: \"" + address.key() + "\" is not in this execution");
  }
  if (discovered_.interventions.contains(address)) {
    throw Error(ErrorCode::already_intervened,
                "\"" + address.key() + "\" is intervened twice");
  }
  if (type == DoType::interventional && discovered_.evidence.contains(address)) {
    throw Error(ErrorCode::already_intervened,
                "cannot intervene on observed \"" + address.key() +
                    "\" with do_type IV");
  }
  const bool plain = entry->family == Family::normal ||
                     entry->family == Family::bernoulli ||
                     entry->family == Family::uniform_continuous ||
                     entry->family == Family::beta;
  if (type == DoType::counterfactual && plain && !entry->parents.empty()) {
    throw Error(ErrorCode::implicit_noise,
                "counterfactual do on \"" + address.key() +
                    "\": a stochastic procedure with parents has implicit noise");
  }
  require_fit(entry->family, value, address);
  discovered_.interventions.emplace(address, Intervention{value, type});
}

void Context::predict(std::string label, const Value& value, bool counterfactual) {
  switch (phase_) {
    case Phase::discovery:
      for (const PredictTarget& t : discovered_.predict_targets) {
        if (t.label == label) {
          throw Error(ErrorCode::duplicate_label,
                      "duplicate prediction label \"" + label + "\"");
        }
      }
      discovered_.predict_targets.push_back({std::move(label), counterfactual});
      return;
    case Phase::abduction:
      if (!counterfactual) trace_.add_prediction(std::move(label), value);
      return;
    case Phase::replay:
      if (counterfactual) trace_.add_prediction(std::move(label), value);
      return;
    case Phase::probe:
      return;
  }
}

bool Context::if_observe_block() const noexcept {
  if (options_.mode == Mode::eager) return true;
  return phase_ != Phase::replay;
}

bool Context::if_do_block() const noexcept {
  if (options_.mode == Mode::eager) return true;
  return phase_ == Phase::discovery || phase_ == Phase::probe;
}

std::optional<ErpRef> Context::memoized(const Address& address) const {
  if (const TraceEntry* e = trace_.find(address)) return ErpRef(address, e->value);
  return std::nullopt;
}

std::optional<ErpRef> Context::short_circuit(const Address& address) {
  if (options_.mode != Mode::lazy) return std::nullopt;
  const Intervention* iv = active_intervention(address);
  if (iv == nullptr) return std::nullopt;
  return record_forced(address, iv->value, Family::delta, {});
}

void Context::check_thunk_address(const Address& expected, const ErpRef& got) const {
  if (got.address() != expected) {
    throw Error(ErrorCode::invalid_query,
                "compute_if_necessary(\"" + expected.key() +
                    "\") produced \"" + got.address().key() + "\"");
  }
}

// ---------------------------------------------------------------------------
// Drivers

Query discover(const Program& program, const EngineOptions& options,
               std::uint64_t seed) {
  Context ctx(Phase::discovery, nullptr, nullptr, seed, kDiscoveryIndex, options);
  try {
    program(ctx);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::program_error,
                std::string("discovery pass: ") + e.what());
  }
  return std::move(ctx).take_discovered();
}

Trace abduction_sample(const Program& program, const Query& query,
                       std::uint64_t seed, std::uint64_t sample_index,
                       const EngineOptions& options) {
  Trace trace = execute(program, Phase::abduction, &query, nullptr, seed,
                        sample_index, options);
  trace.set_log_weight(trace.recompute_log_weight());
  return trace;
}

Trace counterfactual_replay(const Trace& abducted, const Query& query,
                            const Program& program, std::uint64_t seed,
                            std::uint64_t sample_index,
                            const EngineOptions& options) {
  Trace trace = execute(program, Phase::replay, &query, &abducted, seed,
                        sample_index, options);
  trace.set_log_weight(abducted.log_weight());
  return trace;
}

std::size_t InferenceResult::label_index(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return i;
  }
  throw Error(ErrorCode::invalid_query,
              "unknown prediction label \"" + std::string(label) + "\"");
}

InferenceResult run_inference(const Program& program, const RunOptions& options) {
  if (options.n_samples < 1) {
    throw Error(ErrorCode::invalid_query, "n_samples must be at least 1");
  }
  const auto start = std::chrono::steady_clock::now();

  InferenceResult result;
  result.query = discover(program, options.engine, options.seed);
  const Query& query = result.query;

  if (options.audit_dependencies) {
    const auto violations = audit_dependencies(program, options.seed, 4, options.engine);
    if (!violations.empty()) {
      throw Error(ErrorCode::invalid_query,
                  "undeclared dependency: \"" + violations.front().changed.key() +
                      "\" changes when \"" + violations.front().perturbed.key() +
                      "\" is perturbed");
    }
  }

  const std::size_t n = options.n_samples;
  std::unordered_map<std::string, std::size_t> column;
  for (const PredictTarget& t : query.predict_targets) {
    column.emplace(t.label, result.labels.size());
    result.labels.push_back(t.label);
  }
  const std::size_t n_labels = result.labels.size();
  const bool replay = query.needs_replay();

  result.n_samples = n;
  result.predictions.assign(n, std::vector<Value>(n_labels));
  result.log_weights.assign(n, 0.0);
  if (options.keep_traces) result.traces.resize(n);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::uint64_t error_index = std::numeric_limits<std::uint64_t>::max();
  std::exception_ptr error;

  auto fill = [&](std::size_t i, const Trace& trace, std::size_t& filled) {
    for (const auto& [label, value] : trace.predictions()) {
      auto it = column.find(label);
      if (it == column.end()) {
        throw SampleError(ErrorCode::invalid_query, i,
                          "prediction \"" + label +
                              "\" was not recorded during discovery");
      }
      result.predictions[i][it->second] = value;
      ++filled;
    }
  };

  auto work = [&] {
    for (;;) {
      const std::size_t begin = next.fetch_add(kChunk);
      if (begin >= n) return;
      const std::size_t end = std::min(n, begin + kChunk);
      for (std::size_t i = begin; i < end; ++i) {
        try {
          Trace abducted =
              abduction_sample(program, query, options.seed, i, options.engine);
          std::optional<Trace> replayed;
          if (replay) {
            replayed = counterfactual_replay(abducted, query, program,
                                             options.seed, i, options.engine);
          }
          std::size_t filled = 0;
          fill(i, abducted, filled);
          if (replayed) fill(i, *replayed, filled);
          if (filled != n_labels) {
            throw SampleError(ErrorCode::invalid_query, i,
                              "sample did not produce every discovered prediction");
          }
          result.log_weights[i] = abducted.log_weight();
          if (options.keep_traces) {
            result.traces[i] = {std::move(abducted), std::move(replayed)};
          }
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (i < error_index) {
            error_index = i;
            error = std::current_exception();
          }
          return;
        }
      }
    }
  };

  const unsigned workers =
      static_cast<unsigned>(std::clamp<std::size_t>(options.workers, 1, n));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  result.n_rejected = static_cast<std::size_t>(
      std::count(result.log_weights.begin(), result.log_weights.end(), kNegInf));
  result.degenerate = result.n_rejected == n;
  result.program_evaluations = 1 + n + (replay ? n : 0);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

double estimate_expectation(std::span<const double> values,
                            std::span<const double> log_weights) {
  if (values.size() != log_weights.size()) {
    throw Error(ErrorCode::invalid_query, "values and weights differ in length");
  }
  double max_lw = kNegInf;
  for (double lw : log_weights) max_lw = std::max(max_lw, lw);
  if (max_lw == kNegInf) {
    throw Error(ErrorCode::no_surviving_samples, "no surviving samples");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (log_weights[i] == kNegInf) continue;
    const double w = std::exp(log_weights[i] - max_lw);
    num += w * values[i];
    den += w;
  }
  return num / den;
}

double estimate_expectation(const InferenceResult& result, std::string_view label) {
  const std::size_t col = result.label_index(label);
  std::vector<double> values(result.predictions.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = result.predictions[i][col].to_double();
  }
  return estimate_expectation(values, result.log_weights);
}

double ess(std::span<const double> log_weights) {
  double max_lw = kNegInf;
  for (double lw : log_weights) max_lw = std::max(max_lw, lw);
  if (max_lw == kNegInf) return 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  for (double lw : log_weights) {
    if (lw == kNegInf) continue;
    const double w = std::exp(lw - max_lw);
    s1 += w;
    s2 += w * w;
  }
  return s1 * s1 / s2;
}

std::vector<DependencyViolation> audit_dependencies(const Program& program,
                                                    std::uint64_t seed,
                                                    std::size_t n_executions,
                                                    const EngineOptions& options) {
  std::vector<DependencyViolation> violations;
  const Query none;
  for (std::size_t k = 0; k < n_executions; ++k) {
    const Trace base = execute(program, Phase::probe, &none, nullptr, seed, k, options);
    for (const TraceEntry& target : base.entries()) {
      if (target.role != Role::latent) continue;
      Value perturbed;
      if (target.value.is_bool()) {
        perturbed = !target.value.as_bool();
      } else if (target.value.is_integer()) {
        perturbed = target.value.as_integer() + 1;
      } else {
        perturbed = target.value.as_real() + 1.0;
      }
      // Declared descendant closure of the perturbed choice.
      std::unordered_set<std::string> declared{target.address.key()};
      for (const TraceEntry& e : base.entries()) {
        for (const Address& p : e.parents) {
          if (declared.contains(p.key())) {
            declared.insert(e.address.key());
            break;
          }
        }
      }
      Query q;
      q.interventions.emplace(target.address,
                              Intervention{perturbed, DoType::interventional});
      Trace changed;
      try {
        changed = execute(program, Phase::probe, &q, nullptr, seed, k, options);
      } catch (const Error&) {
        continue;  // perturbation left the program's domain
      }
      for (const TraceEntry& e : changed.entries()) {
        const TraceEntry* b = base.find(e.address);
        if (b != nullptr && !(b->value == e.value) &&
            !declared.contains(e.address.key())) {
          violations.push_back({target.address, e.address});
        }
      }
    }
  }
  return violations;
}

}  // namespace twinworld
