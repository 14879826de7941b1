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

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

#include "twinworld/value.hpp"

namespace twinworld {

/// Philox4x32-10 block function (Salmon et al., SC'11). Maps a 128-bit
/// counter under a 64-bit key to 128 pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Stable 64-bit hash of an address key (FNV-1a followed by a splitmix64
/// finalizer). Independent of the standard library implementation.
std::uint64_t hash_key(std::string_view key) noexcept;

std::uint64_t mix64(std::uint64_t x) noexcept;

/// Which phase of an execution a stream serves. Replay gets its own streams
/// so that prior resampling in the counterfactual world is not a copy of the
/// abducted draw.
enum class StreamPurpose : std::uint32_t {
  abduction = 0,
  replay = 1,
  discovery = 2,
  generator = 3,
};

/// A deterministic stream of random bits addressed by a Philox counter.
/// Satisfies UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t key, std::uint64_t lane) noexcept
      : key_(key), lane_(lane) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept;

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() noexcept;

  double normal() noexcept;
  double normal(double mean, double std) noexcept { return mean + std * normal(); }
  bool bernoulli(double p) noexcept { return uniform() < p; }
  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }
  /// Gamma(shape, 1) by Marsaglia-Tsang.
  double gamma(double shape) noexcept;
  double beta(double a, double b) noexcept;
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t lane_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;  // 32-bit words consumed from block_
};

/// Stream for one random choice. A pure function of the triple, so the same
/// choice draws the same bits regardless of evaluation order, laziness or
/// worker count.
RandomStream rng_for_address(std::uint64_t seed, std::uint64_t sample_index,
                             const Address& address,
                             StreamPurpose purpose = StreamPurpose::abduction);

RandomStream rng_for_key(std::uint64_t seed, std::uint64_t sample_index,
                         std::string_view key,
                         StreamPurpose purpose = StreamPurpose::abduction);

}  // namespace twinworld
