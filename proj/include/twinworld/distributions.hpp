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
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "twinworld/random.hpp"
#include "twinworld/value.hpp"

namespace twinworld {

enum class Family {
  normal,
  bernoulli,
  uniform_continuous,
  beta,
  delta,
  observable_normal,
  observable_bernoulli,
  observable_noisy_or,
};

std::string_view to_string(Family family) noexcept;

// Family parameter records. Each constructor-free aggregate is validated by
// ErpSpec::validate().
struct NormalParams {
  double mean;
  double std;
};
struct BernoulliParams {
  double p;
};
struct UniformParams {
  double lo;
  double hi;
};
struct BetaParams {
  double a;
  double b;
};
struct DeltaParams {
  Value value;
};
/// Output = mean + eps with eps ~ Normal(0, noise_std).
struct ObservableNormalParams {
  double mean;
  double noise_std;
};
/// Output = f xor eps with eps ~ Bernoulli(flip_prob).
struct ObservableBernoulliParams {
  bool f_value;
  double flip_prob;
};
/// Output = eps_0 or OR_j (eps_j and parent_j) with eps_0 ~ Bernoulli(1 -
/// leak) and eps_j ~ Bernoulli(1 - lambdas[j]).
struct ObservableNoisyOrParams {
  double leak;  // lambda0
  std::vector<double> lambdas;
  std::vector<bool> parent_states;
};

using ErpParams =
    std::variant<NormalParams, BernoulliParams, UniformParams, BetaParams,
                 DeltaParams, ObservableNormalParams, ObservableBernoulliParams,
                 ObservableNoisyOrParams>;

/// Proposal overrides. Normal accepts mean/std, Bernoulli accepts p; the
/// remaining fields must stay empty.
struct ProposalOverride {
  std::optional<double> mean;
  std::optional<double> std;
  std::optional<double> p;
};

/// An elementary random procedure: family parameters, declared parents and
/// optional proposal overrides.
struct ErpSpec {
  ErpParams params;
  std::vector<Address> parents;
  std::optional<ProposalOverride> proposal;

  Family family() const noexcept;
  bool is_observable() const noexcept;
  /// Normal, Bernoulli, UniformContinuous and Beta: randomness that is not a
  /// separate trace entry.
  bool is_plain_stochastic() const noexcept;

  /// Throws Error(invalid_parameter) when a hyperparameter is out of range.
  void validate() const;

  ErpSpec& depends_on(std::vector<Address> addresses) &;
  ErpSpec&& depends_on(std::vector<Address> addresses) &&;
  ErpSpec&& with_proposal(ProposalOverride override_params) &&;
};

ErpSpec normal(double mean, double std);
ErpSpec bernoulli(double p);
ErpSpec uniform_continuous(double lo, double hi);
ErpSpec beta(double a, double b);
ErpSpec delta(Value value);
ErpSpec observable_normal(double mean, double noise_std);
ErpSpec observable_bernoulli(bool f_value, double flip_prob);
ErpSpec observable_noisy_or(double leak, std::vector<double> lambdas,
                            std::vector<bool> parent_states);

struct Draw {
  Value value;
  double log_prior;
  double log_proposal;
};

/// Exact log density (or mass) of `x`. Observable families score the output
/// marginally over their noise. Delta gives 0 on a match, -inf otherwise.
/// Throws Error(type_mismatch) when `x` has the wrong alternative.
double log_density(const ErpSpec& spec, const Value& x,
                   double delta_tolerance = 0.0);

/// Draws from the proposal (or the prior when no override is set) and scores
/// the draw under both.
Draw sample_and_score(const ErpSpec& spec, RandomStream& rng);

double normal_log_density(double x, double mean, double std) noexcept;
double bernoulli_log_mass(bool x, double p) noexcept;

/// Noise value proposed so that an observable procedure reproduces an
/// observation. `log_prior` is the noise prior at the value and
/// `log_proposal` the probability with which it was proposed; their
/// difference is the weight contribution.
struct NoiseInversion {
  Value noise_value;
  /// Low-order part of a Real noise: the exact noise is noise_value +
  /// residual, which lets forward evaluation reproduce the observation
  /// bit for bit.
  double residual = 0.0;
  double log_prior = 0.0;
  double log_proposal = 0.0;
  bool feasible = true;
};

/// eps = observed - mean, proposed with probability one.
NoiseInversion invert_observable_normal(double mean, double noise_std,
                                        double observed);

/// eps = (f != observed), proposed with probability one.
NoiseInversion invert_observable_bernoulli(bool f_value, double flip_prob,
                                           bool observed);

/// P(output = false) = leak * prod_{j active} lambdas[j].
double noisy_or_false_prob(double leak, std::span<const double> lambdas,
                           const std::vector<bool>& parent_states);

/// Noise assignment for a noisy-OR gate packed as a bit mask: bit 0 is the
/// leak noise eps_0, bit j + 1 belongs to parent j.
struct NoisyOrNoise {
  std::uint64_t bits = 0;
  double log_prior = 0.0;
  double log_proposal = 0.0;
  bool feasible = true;

  bool eps(std::size_t j) const noexcept { return (bits >> j) & 1u; }
};

NoisyOrNoise noisy_or_propose_noise(bool observed, double leak,
                                    std::span<const double> lambdas,
                                    const std::vector<bool>& parent_states,
                                    RandomStream& rng);

/// Prior draw of all noisy-OR noises.
NoisyOrNoise noisy_or_sample_noise(double leak, std::span<const double> lambdas,
                                   RandomStream& rng);

bool noisy_or_output(std::uint64_t noise_bits,
                     const std::vector<bool>& parent_states) noexcept;

/// Log prior of a packed noise assignment.
double noisy_or_noise_log_prior(std::uint64_t noise_bits, double leak,
                                std::span<const double> lambdas) noexcept;

/// Forward draw of an observable procedure's noise from its prior.
Draw sample_noise(const ErpSpec& spec, RandomStream& rng);

/// Output of an observable procedure for a given noise value.
Value apply_noise(const ErpSpec& spec, const Value& noise,
                  double residual = 0.0);

/// mean + (noise + residual) with compensated rounding; exact whenever the
/// true sum is representable.
double apply_normal_noise(double mean, double noise, double residual) noexcept;

/// Inversion dispatch for the three observable families.
NoiseInversion invert_observation(const ErpSpec& spec, const Value& observed,
                                  RandomStream& rng);

/// Family recorded for the auxiliary noise choice of an observable.
Family noise_family(Family observable) noexcept;

}  // namespace twinworld
