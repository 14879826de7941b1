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

#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "twinworld/error.hpp"
#include "twinworld/random.hpp"
#include "twinworld/trace.hpp"
#include "twinworld/value.hpp"

using namespace twinworld;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

TraceEntry latent(const std::string& key, double lp, double lq,
                  std::vector<Address> parents = {}) {
  return TraceEntry{Address(key), Value(0.0), lp, lq, Role::latent, Family::normal,
                    std::move(parents)};
}
}  // namespace

TEST_CASE("fresh_address counts auto keys and passes user keys through") {
  Trace t;
  CHECK(t.fresh_address().key() == "auto:0");
  t.record(latent("auto:0", 0, 0));
  CHECK(t.fresh_address().key() == "auto:1");
  t.record(latent("auto:1", 0, 0));
  CHECK(t.fresh_address().key() == "auto:2");
  CHECK(t.fresh_address("X2").key() == "X2");
}

TEST_CASE("duplicate user key is an address collision") {
  Trace t;
  t.record(latent("X", 0, 0));
  try {
    t.fresh_address("X");
    FAIL("expected collision");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::address_collision);
  }
  CHECK_THROWS_AS(t.record(latent("X", 0, 0)), Error);
}

TEST_CASE("parents must be recorded earlier") {
  Trace t;
  CHECK_THROWS_AS(t.record(latent("A", 0, 0, {Address("B")})), Error);
  t.record(latent("B", 0, 0));
  t.record(latent("A", 0, 0, {Address("B")}));
  CHECK(t.size() == 2);
}

TEST_CASE("weight_accumulate examples") {
  Trace t;
  weight_accumulate(t, 0.0);
  CHECK(t.log_weight() == 0.0);
  weight_accumulate(t, std::log(0.5));
  weight_accumulate(t, std::log(0.5));
  CHECK(t.log_weight() == doctest::Approx(std::log(0.25)).epsilon(1e-15));

  Trace r;
  weight_accumulate(r, -kInf);
  weight_accumulate(r, 3.0);
  CHECK(r.log_weight() == -kInf);
  CHECK(r.rejected());

  Trace n;
  try {
    weight_accumulate(n, std::nan(""));
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_weight_increment);
  }
}

TEST_CASE("log weight decomposes over entry contributions") {
  Trace t;
  t.record(latent("a", -1.25, -0.5));
  t.record(TraceEntry{Address("b"), Value(true), -0.7, 0.0, Role::observed,
                      Family::bernoulli, {}});
  t.record(TraceEntry{Address("c"), Value(2.0), -9.0, -3.0, Role::intervened,
                      Family::delta, {}});
  const double expected = (-1.25 - -0.5) + -0.7 + 0.0;
  CHECK(std::abs(t.log_weight() - expected) <= 1e-12);
  CHECK(std::abs(t.recompute_log_weight() - expected) <= 1e-12);
  CHECK(weight_contribution(t.entries()[2]) == 0.0);
}

TEST_CASE("observed entry with zero likelihood rejects the trace") {
  Trace t;
  t.record(latent("a", -1.0, -1.0));
  t.record(TraceEntry{Address("o"), Value(1), -kInf, 0.0, Role::observed,
                      Family::delta, {}});
  CHECK(t.log_weight() == -kInf);
  CHECK(t.recompute_log_weight() == -kInf);
}

TEST_CASE("log_add") {
  CHECK(log_add(-kInf, -kInf) == -kInf);
  CHECK(log_add(std::log(0.25), std::log(0.5)) == doctest::Approx(std::log(0.75)));
  CHECK(log_add(-kInf, 1.5) == 1.5);
}

TEST_CASE("value equality and tolerance") {
  CHECK(Value(true) == Value(true));
  CHECK_FALSE(Value(1) == Value(1.0));
  CHECK(Value(0.1 + 0.2) == Value(0.1 + 0.2));
  CHECK_FALSE(Value(0.1 + 0.2) == Value(0.3));
  CHECK(values_match(Value(0.1 + 0.2), Value(0.3), 1e-12));
  CHECK_FALSE(values_match(Value(0.1 + 0.2), Value(0.3), 0.0));
  CHECK_THROWS_AS((void)Value(true).as_real(), Error);
  CHECK(Value(true).to_double() == 1.0);
}

TEST_CASE("philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) ==
        A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                   {0xffffffffu, 0xffffffffu}) ==
        A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                   {0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("rng_for_address is a pure function of its inputs") {
  RandomStream a = rng_for_address(42, 7, Address("X"));
  RandomStream b = rng_for_address(42, 7, Address("X"));
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct addresses give distinct first draws") {
  int collisions = 0;
  constexpr int kPairs = 10000;
  for (int i = 0; i < kPairs; ++i) {
    const std::string k = "node" + std::to_string(i);
    const double u = rng_for_address(3, 0, Address(k)).uniform();
    const double v = rng_for_address(3, 0, Address(k + "'")).uniform();
    if (u == v) ++collisions;
  }
  CHECK(static_cast<double>(collisions) / kPairs < 1e-3);
}

TEST_CASE("purposes, seeds and sample indices separate streams") {
  const Address x("X");
  std::set<std::uint64_t> first;
  first.insert(rng_for_address(1, 0, x, StreamPurpose::abduction).next_u64());
  first.insert(rng_for_address(1, 0, x, StreamPurpose::replay).next_u64());
  first.insert(rng_for_address(1, 0, x, StreamPurpose::discovery).next_u64());
  first.insert(rng_for_address(2, 0, x, StreamPurpose::abduction).next_u64());
  first.insert(rng_for_address(1, 1, x, StreamPurpose::abduction).next_u64());
  CHECK(first.size() == 5);
}

TEST_CASE("uniform draws lie in the open unit interval with mean one half") {
  RandomStream rng = rng_for_key(9, 0, "u");
  double sum = 0.0;
  constexpr int kN = 100000;
  for (int i = 0; i < kN; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  const double se = std::sqrt(1.0 / 12.0 / kN);
  CHECK(std::abs(sum / kN - 0.5) < 4 * se);
}

TEST_CASE("normal, gamma and beta samplers match their moments") {
  RandomStream rng = rng_for_key(11, 0, "moments");
  constexpr int kN = 200000;
  double n1 = 0, n2 = 0, g = 0, b = 0;
  for (int i = 0; i < kN; ++i) {
    const double z = rng.normal();
    n1 += z;
    n2 += z * z;
    g += rng.gamma(0.5);
    b += rng.beta(5.0, 5.0);
  }
  CHECK(std::abs(n1 / kN) < 4 / std::sqrt(kN));
  CHECK(std::abs(n2 / kN - 1.0) < 4 * std::sqrt(2.0 / kN));
  CHECK(std::abs(g / kN - 0.5) < 4 * std::sqrt(0.5 / kN));
  CHECK(std::abs(b / kN - 0.5) < 4 * std::sqrt(0.25 / 11.0 / kN));
}

TEST_CASE("below is uniform over its range") {
  RandomStream rng = rng_for_key(5, 0, "below");
  std::array<int, 7> counts{};
  constexpr int kN = 70000;
  for (int i = 0; i < kN; ++i) ++counts[rng.below(7)];
  for (int c : counts) CHECK(std::abs(c - kN / 7.0) < 5 * std::sqrt(kN / 7.0));
}
