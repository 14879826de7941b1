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

#include "twinworld/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "twinworld/error.hpp"

namespace twinworld {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxNoisyOrParents = 63;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void bad_param(std::string_view family, const std::string& what) {
  throw Error(ErrorCode::invalid_parameter,
              std::string(family) + ": " + what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

double log_or_neg_inf(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

std::pair<double, double> two_sum(double a, double b) noexcept {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

}  // namespace

std::string_view to_string(Family family) noexcept {
  switch (family) {
    case Family::normal: return "Normal";
    case Family::bernoulli: return "Bernoulli";
    case Family::uniform_continuous: return "UniformContinuous";
    case Family::beta: return "Beta";
    case Family::delta: return "Delta";
    case Family::observable_normal: return "ObservableNormal";
    case Family::observable_bernoulli: return "ObservableBernoulli";
    case Family::observable_noisy_or: return "ObservableNoisyOr";
  }
  return "?";
}

Family ErpSpec::family() const noexcept {
  return static_cast<Family>(params.index());
}

bool ErpSpec::is_observable() const noexcept {
  const Family f = family();
  return f == Family::observable_normal || f == Family::observable_bernoulli ||
         f == Family::observable_noisy_or;
}

bool ErpSpec::is_plain_stochastic() const noexcept {
  const Family f = family();
  return f == Family::normal || f == Family::bernoulli ||
         f == Family::uniform_continuous || f == Family::beta;
}

void ErpSpec::validate() const {
  const std::string_view name = to_string(family());
  std::visit(
      overloaded{
          [&](const NormalParams& p) {
            if (!std::isfinite(p.mean)) bad_param(name, "mean must be finite");
            if (!(p.std > 0.0) || !std::isfinite(p.std))
              bad_param(name, "std must be > 0");
          },
          [&](const BernoulliParams& p) {
            if (!is_probability(p.p)) bad_param(name, "p must lie in [0, 1]");
          },
          [&](const UniformParams& p) {
            if (!(p.lo < p.hi) || !std::isfinite(p.lo) || !std::isfinite(p.hi))
              bad_param(name, "requires finite lo < hi");
          },
          [&](const BetaParams& p) {
            if (!(p.a > 0.0) || !(p.b > 0.0))
              bad_param(name, "a and b must be > 0");
          },
          [&](const DeltaParams&) {},
          [&](const ObservableNormalParams& p) {
            if (!std::isfinite(p.mean)) bad_param(name, "mean must be finite");
            if (!(p.noise_std > 0.0) || !std::isfinite(p.noise_std))
              bad_param(name, "noise_std must be > 0");
          },
          [&](const ObservableBernoulliParams& p) {
            if (!is_probability(p.flip_prob))
              bad_param(name, "flip probability must lie in [0, 1]");
          },
          [&](const ObservableNoisyOrParams& p) {
            if (!is_probability(p.leak))
              bad_param(name, "lambda0 must lie in [0, 1]");
            if (p.lambdas.size() != p.parent_states.size())
              bad_param(name, "length mismatch between lambdas and parent states");
            if (p.lambdas.size() > kMaxNoisyOrParents)
              bad_param(name, "at most 63 parents are supported");
            for (double l : p.lambdas)
              if (!is_probability(l)) bad_param(name, "lambda must lie in [0, 1]");
          },
      },
      params);

  if (proposal) {
    const Family f = family();
    if (f == Family::normal) {
      if (proposal->p) bad_param(name, "proposal p is not a Normal parameter");
      if (proposal->std && !(*proposal->std > 0.0))
        bad_param(name, "proposal std must be > 0");
    } else if (f == Family::bernoulli) {
      if (proposal->mean || proposal->std)
        bad_param(name, "only proposal p applies to Bernoulli");
      if (proposal->p && !is_probability(*proposal->p))
        bad_param(name, "proposal p must lie in [0, 1]");
    } else {
      bad_param(name, "does not accept proposal overrides");
    }
  }
}

ErpSpec& ErpSpec::depends_on(std::vector<Address> addresses) & {
  parents = std::move(addresses);
  return *this;
}

ErpSpec&& ErpSpec::depends_on(std::vector<Address> addresses) && {
  parents = std::move(addresses);
  return std::move(*this);
}

ErpSpec&& ErpSpec::with_proposal(ProposalOverride override_params) && {
  proposal = override_params;
  return std::move(*this);
}

ErpSpec normal(double mean, double std) { return {NormalParams{mean, std}, {}, {}}; }
ErpSpec bernoulli(double p) { return {BernoulliParams{p}, {}, {}}; }
ErpSpec uniform_continuous(double lo, double hi) {
  return {UniformParams{lo, hi}, {}, {}};
}
ErpSpec beta(double a, double b) { return {BetaParams{a, b}, {}, {}}; }
ErpSpec delta(Value value) { return {DeltaParams{std::move(value)}, {}, {}}; }
ErpSpec observable_normal(double mean, double noise_std) {
  return {ObservableNormalParams{mean, noise_std}, {}, {}};
}
ErpSpec observable_bernoulli(bool f_value, double flip_prob) {
  return {ObservableBernoulliParams{f_value, flip_prob}, {}, {}};
}
ErpSpec observable_noisy_or(double leak, std::vector<double> lambdas,
                            std::vector<bool> parent_states) {
  return {ObservableNoisyOrParams{leak, std::move(lambdas),
                                  std::move(parent_states)},
          {},
          {}};
}

double normal_log_density(double x, double mean, double std) noexcept {
  const double z = (x - mean) / std;
  return -0.5 * z * z - std::log(std) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double bernoulli_log_mass(bool x, double p) noexcept {
  return log_or_neg_inf(x ? p : 1.0 - p);
}

double log_density(const ErpSpec& spec, const Value& x, double delta_tolerance) {
  return std::visit(
      overloaded{
          [&](const NormalParams& p) {
            return normal_log_density(x.as_real(), p.mean, p.std);
          },
          [&](const BernoulliParams& p) {
            return bernoulli_log_mass(x.as_bool(), p.p);
          },
          [&](const UniformParams& p) {
            const double v = x.as_real();
            return (v >= p.lo && v <= p.hi) ? -std::log(p.hi - p.lo) : kNegInf;
          },
          [&](const BetaParams& p) {
            const double v = x.as_real();
            if (!(v > 0.0 && v < 1.0)) return kNegInf;
            return (p.a - 1.0) * std::log(v) + (p.b - 1.0) * std::log1p(-v) +
                   std::lgamma(p.a + p.b) - std::lgamma(p.a) - std::lgamma(p.b);
          },
          [&](const DeltaParams& p) {
            if (x.storage().index() != p.value.storage().index()) {
              throw Error(ErrorCode::type_mismatch,
                          "Delta of " + p.value.to_string() +
                              " scored against " + x.to_string());
            }
            return values_match(p.value, x, delta_tolerance) ? 0.0 : kNegInf;
          },
          [&](const ObservableNormalParams& p) {
            return normal_log_density(x.as_real(), p.mean, p.noise_std);
          },
          [&](const ObservableBernoulliParams& p) {
            return bernoulli_log_mass(x.as_bool() != p.f_value, p.flip_prob);
          },
          [&](const ObservableNoisyOrParams& p) {
            const double p_false =
                noisy_or_false_prob(p.leak, p.lambdas, p.parent_states);
            return log_or_neg_inf(x.as_bool() ? 1.0 - p_false : p_false);
          },
      },
      spec.params);
}

Draw sample_and_score(const ErpSpec& spec, RandomStream& rng) {
  switch (spec.family()) {
    case Family::normal: {
      const auto& p = std::get<NormalParams>(spec.params);
      if (spec.proposal && (spec.proposal->mean || spec.proposal->std)) {
        const double qm = spec.proposal->mean.value_or(p.mean);
        const double qs = spec.proposal->std.value_or(p.std);
        const double x = rng.normal(qm, qs);
        return {x, normal_log_density(x, p.mean, p.std),
                normal_log_density(x, qm, qs)};
      }
      const double x = rng.normal(p.mean, p.std);
      const double lp = normal_log_density(x, p.mean, p.std);
      return {x, lp, lp};
    }
    case Family::bernoulli: {
      const auto& p = std::get<BernoulliParams>(spec.params);
      if (spec.proposal && spec.proposal->p) {
        const bool x = rng.bernoulli(*spec.proposal->p);
        return {x, bernoulli_log_mass(x, p.p),
                bernoulli_log_mass(x, *spec.proposal->p)};
      }
      const bool x = rng.bernoulli(p.p);
      const double lp = bernoulli_log_mass(x, p.p);
      return {x, lp, lp};
    }
    case Family::uniform_continuous: {
      const auto& p = std::get<UniformParams>(spec.params);
      const double x = rng.uniform(p.lo, p.hi);
      const double lp = -std::log(p.hi - p.lo);
      return {x, lp, lp};
    }
    case Family::beta: {
      const auto& p = std::get<BetaParams>(spec.params);
      const double x = rng.beta(p.a, p.b);
      const double lp = log_density(spec, x);
      return {x, lp, lp};
    }
    case Family::delta:
      return {std::get<DeltaParams>(spec.params).value, 0.0, 0.0};
    case Family::observable_normal:
    case Family::observable_bernoulli:
    case Family::observable_noisy_or: {
      const Draw noise = sample_noise(spec, rng);
      Value out = apply_noise(spec, noise.value);
      const double lp = log_density(spec, out);
      return {std::move(out), lp, lp};
    }
  }
  return {};
}

double apply_normal_noise(double mean, double noise, double residual) noexcept {
  const auto [hi, lo] = two_sum(mean, noise);
  return hi + (lo + residual);
}

NoiseInversion invert_observable_normal(double mean, double noise_std,
                                        double observed) {
  const auto [eps, residual] = two_sum(observed, -mean);
  NoiseInversion inv;
  inv.noise_value = eps;
  inv.residual = residual;
  inv.log_prior = normal_log_density(eps, 0.0, noise_std);
  inv.log_proposal = 0.0;
  inv.feasible = true;
  return inv;
}

NoiseInversion invert_observable_bernoulli(bool f_value, double flip_prob,
                                           bool observed) {
  const bool eps = f_value != observed;
  NoiseInversion inv;
  inv.noise_value = eps;
  inv.log_prior = bernoulli_log_mass(eps, flip_prob);
  inv.log_proposal = 0.0;
  inv.feasible = inv.log_prior != kNegInf;
  return inv;
}

double noisy_or_false_prob(double leak, std::span<const double> lambdas,
                           const std::vector<bool>& parent_states) {
  if (lambdas.size() != parent_states.size()) {
    throw Error(ErrorCode::invalid_parameter,
                "noisy-OR: length mismatch between lambdas and parent states");
  }
  double p = leak;
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    if (parent_states[j]) p *= lambdas[j];
  }
  return p;
}

bool noisy_or_output(std::uint64_t noise_bits,
                     const std::vector<bool>& parent_states) noexcept {
  if (noise_bits & 1u) return true;
  for (std::size_t j = 0; j < parent_states.size(); ++j) {
    if (parent_states[j] && ((noise_bits >> (j + 1)) & 1u)) return true;
  }
  return false;
}

double noisy_or_noise_log_prior(std::uint64_t noise_bits, double leak,
                                std::span<const double> lambdas) noexcept {
  // eps_0 ~ Bernoulli(1 - leak), eps_j ~ Bernoulli(1 - lambda_j).
  double lp = bernoulli_log_mass(noise_bits & 1u, 1.0 - leak);
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    lp += bernoulli_log_mass((noise_bits >> (j + 1)) & 1u, 1.0 - lambdas[j]);
  }
  return lp;
}

NoisyOrNoise noisy_or_sample_noise(double leak, std::span<const double> lambdas,
                                   RandomStream& rng) {
  NoisyOrNoise out;
  if (rng.bernoulli(1.0 - leak)) out.bits |= 1u;
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    if (rng.bernoulli(1.0 - lambdas[j])) out.bits |= std::uint64_t{1} << (j + 1);
  }
  out.log_prior = noisy_or_noise_log_prior(out.bits, leak, lambdas);
  out.log_proposal = out.log_prior;
  return out;
}

NoisyOrNoise noisy_or_propose_noise(bool observed, double leak,
                                    std::span<const double> lambdas,
                                    const std::vector<bool>& parent_states,
                                    RandomStream& rng) {
  if (lambdas.size() != parent_states.size()) {
    throw Error(ErrorCode::invalid_parameter,
                "noisy-OR: length mismatch between lambdas and parent states");
  }
  NoisyOrNoise out;
  double log_q = 0.0;
  if (!observed) {
    // Leak and every active parent's noise are pinned to false; noises of
    // inactive parents are irrelevant to the output and keep their priors.
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
      if (parent_states[j]) continue;
      const bool e = rng.bernoulli(1.0 - lambdas[j]);
      if (e) out.bits |= std::uint64_t{1} << (j + 1);
      log_q += bernoulli_log_mass(e, 1.0 - lambdas[j]);
    }
  } else {
    bool active_fired = false;
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
      const bool e = rng.bernoulli(1.0 - lambdas[j]);
      if (e) out.bits |= std::uint64_t{1} << (j + 1);
      log_q += bernoulli_log_mass(e, 1.0 - lambdas[j]);
      active_fired = active_fired || (e && parent_states[j]);
    }
    if (active_fired) {
      const bool e0 = rng.bernoulli(1.0 - leak);
      if (e0) out.bits |= 1u;
      log_q += bernoulli_log_mass(e0, 1.0 - leak);
    } else {
      out.bits |= 1u;  // the leak must fire
    }
  }
  out.log_prior = noisy_or_noise_log_prior(out.bits, leak, lambdas);
  out.log_proposal = log_q;
  out.feasible = out.log_prior != kNegInf;
  return out;
}

Draw sample_noise(const ErpSpec& spec, RandomStream& rng) {
  switch (spec.family()) {
    case Family::observable_normal: {
      const auto& p = std::get<ObservableNormalParams>(spec.params);
      const double e = rng.normal(0.0, p.noise_std);
      const double lp = normal_log_density(e, 0.0, p.noise_std);
      return {e, lp, lp};
    }
    case Family::observable_bernoulli: {
      const auto& p = std::get<ObservableBernoulliParams>(spec.params);
      const bool e = rng.bernoulli(p.flip_prob);
      const double lp = bernoulli_log_mass(e, p.flip_prob);
      return {e, lp, lp};
    }
    case Family::observable_noisy_or: {
      const auto& p = std::get<ObservableNoisyOrParams>(spec.params);
      const NoisyOrNoise n = noisy_or_sample_noise(p.leak, p.lambdas, rng);
      return {static_cast<std::int64_t>(n.bits), n.log_prior, n.log_proposal};
    }
    default:
      throw Error(ErrorCode::invalid_parameter,
                  std::string(to_string(spec.family())) +
                      " has no explicit noise");
  }
}

Value apply_noise(const ErpSpec& spec, const Value& noise, double residual) {
  switch (spec.family()) {
    case Family::observable_normal:
      return apply_normal_noise(std::get<ObservableNormalParams>(spec.params).mean,
                                noise.as_real(), residual);
    case Family::observable_bernoulli:
      return std::get<ObservableBernoulliParams>(spec.params).f_value !=
             noise.as_bool();
    case Family::observable_noisy_or:
      return noisy_or_output(
          static_cast<std::uint64_t>(noise.as_integer()),
          std::get<ObservableNoisyOrParams>(spec.params).parent_states);
    default:
      throw Error(ErrorCode::invalid_parameter,
                  std::string(to_string(spec.family())) +
                      " has no explicit noise");
  }
}

NoiseInversion invert_observation(const ErpSpec& spec, const Value& observed,
                                  RandomStream& rng) {
  switch (spec.family()) {
    case Family::observable_normal: {
      const auto& p = std::get<ObservableNormalParams>(spec.params);
      return invert_observable_normal(p.mean, p.noise_std, observed.as_real());
    }
    case Family::observable_bernoulli: {
      const auto& p = std::get<ObservableBernoulliParams>(spec.params);
      return invert_observable_bernoulli(p.f_value, p.flip_prob,
                                         observed.as_bool());
    }
    case Family::observable_noisy_or: {
      const auto& p = std::get<ObservableNoisyOrParams>(spec.params);
      const NoisyOrNoise n = noisy_or_propose_noise(
          observed.as_bool(), p.leak, p.lambdas, p.parent_states, rng);
      NoiseInversion inv;
      inv.noise_value = static_cast<std::int64_t>(n.bits);
      inv.log_prior = n.log_prior;
      inv.log_proposal = n.log_proposal;
      inv.feasible = n.feasible;
      return inv;
    }
    default:
      throw Error(ErrorCode::unobservable_procedure,
                  std::string(to_string(spec.family())) +
                      " cannot invert an observation");
  }
}

Family noise_family(Family observable) noexcept {
  return observable == Family::observable_normal ? Family::normal
                                                 : Family::bernoulli;
}

}  // namespace twinworld
