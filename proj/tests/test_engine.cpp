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

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "support.hpp"
#include "twinworld/engine.hpp"
#include "twinworld/error.hpp"

using namespace twinworld;
using namespace twinworld::testing;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::program_error;
}

RunOptions run_options(std::size_t n, std::uint64_t seed, Mode mode = Mode::eager,
                       unsigned workers = 1) {
  RunOptions o;
  o.n_samples = n;
  o.seed = seed;
  o.workers = workers;
  o.engine.mode = mode;
  return o;
}
}  // namespace

TEST_CASE("discovery records the query") {
  const Query q = discover(gaussian_program());
  REQUIRE(q.evidence.size() == 1);
  CHECK(q.evidence.at(Address("Y")) == Value(kObservedY));
  REQUIRE(q.interventions.size() == 1);
  CHECK(q.interventions.at(Address("Z")).value == Value(kForcedZ));
  CHECK(q.interventions.at(Address("Z")).type == DoType::counterfactual);
  REQUIRE(q.predict_targets.size() == 1);
  CHECK(q.needs_replay());
}

TEST_CASE("abduction on the Gaussian model weights by the inverted noise") {
  const Program p = gaussian_program();
  const Query q = discover(p);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Trace t = abduction_sample(p, q, 99, i);
    const TraceEntry* x = t.find(Address("X"));
    const TraceEntry* z = t.find(Address("Z"));
    const TraceEntry* eps = t.find(Address("Y/noise"));
    REQUIRE(x != nullptr);
    REQUIRE(z != nullptr);
    REQUIRE(eps != nullptr);
    const double expected =
        normal_log_density(kObservedY - x->value.as_real() - z->value.as_real(), 0, 2);
    CHECK(t.log_weight() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(t.find(Address("Y"))->role == Role::observed);
    CHECK(t.find(Address("Y"))->value == Value(kObservedY));
  }
}

TEST_CASE("observing ObservableNormal(0, 2) at 1.2342") {
  const Program p = [](Context& ctx) {
    const ErpRef y = ctx.sample(observable_normal(0.0, 2.0), "Y");
    ctx.observe(y, kObservedY);
  };
  const Query q = discover(p);
  const Trace t = abduction_sample(p, q, 1, 0);
  CHECK(t.find(Address("Y/noise"))->value == Value(kObservedY));
  CHECK(t.log_weight() == doctest::Approx(normal_log_density(kObservedY, 0, 2)));
}

TEST_CASE("Delta observations") {
  auto program = [](int observed) {
    return [observed](Context& ctx) {
      const ErpRef d = ctx.sample(delta(Value(1)), "D");
      ctx.observe(d, Value(observed));
      ctx.predict("d", d.value(), false);
    };
  };
  const InferenceResult hit = run_inference(program(1), run_options(10, 3));
  CHECK(hit.n_rejected == 0);
  for (double lw : hit.log_weights) CHECK(lw == 0.0);
  const InferenceResult miss = run_inference(program(0), run_options(10, 3));
  CHECK(miss.n_rejected == 10);
  CHECK(miss.degenerate);
  CHECK(code_of([&] { estimate_expectation(miss, "d"); }) ==
        ErrorCode::no_surviving_samples);
}

TEST_CASE("Delta of a fair coin is accepted about half the time") {
  const Program p = [](Context& ctx) {
    const ErpRef c = ctx.sample(bernoulli(0.5), "coin");
    const ErpRef d = ctx.sample(delta(c.value()).depends_on({c}), "copy");
    ctx.observe(d, true);
    ctx.predict("c", c.value(), false);
  };
  const InferenceResult r = run_inference(p, run_options(10000, 5));
  const double accepted = 1.0 - static_cast<double>(r.n_rejected) / 10000.0;
  CHECK(std::abs(accepted - 0.5) < 3 * std::sqrt(0.25 / 10000.0));
  CHECK(estimate_expectation(r, "c") == 1.0);
}

TEST_CASE("no observations gives zero log weight") {
  const Program p = [](Context& ctx) {
    const ErpRef x = ctx.sample(normal(0, 1), "X");
    ctx.predict("x", x.value(), false);
  };
  const InferenceResult r = run_inference(p, run_options(100, 8));
  for (double lw : r.log_weights) CHECK(lw == 0.0);
  CHECK(r.program_evaluations == 101);
}

TEST_CASE("constant program") {
  const Program p = [](Context& ctx) {
    ctx.predict("c", ctx.sample(delta(Value(7))).value(), false);
  };
  const InferenceResult r = run_inference(p, run_options(1, 0));
  CHECK(r.predictions[0][0] == Value(7));
  CHECK(r.log_weights[0] == 0.0);
  CHECK(estimate_expectation(r, "c") == 7.0);
}

TEST_CASE("counterfactual do: prior in abduction, forced in replay") {
  const Program p = gaussian_program();
  const Query q = discover(p);
  const Trace a = abduction_sample(p, q, 12, 4);
  const TraceEntry* z = a.find(Address("Z"));
  CHECK(z->role == Role::latent);
  CHECK_FALSE(z->value == Value(kForcedZ));
  const Trace r = counterfactual_replay(a, q, p, 12, 4);
  CHECK(r.find(Address("Z"))->value == Value(kForcedZ));
  CHECK(r.find(Address("Z"))->role == Role::intervened);
  CHECK(r.find(Address("X"))->value == a.find(Address("X"))->value);
  CHECK(r.find(Address("Y/noise"))->value == a.find(Address("Y/noise"))->value);
  // Y' = X + z + eps.
  const double y_cf = r.predictions().at(0).second.as_real();
  const double expected = a.find(Address("X"))->value.as_real() + kForcedZ +
                          (kObservedY - a.find(Address("X"))->value.as_real() -
                           z->value.as_real());
  CHECK(y_cf == doctest::Approx(expected).epsilon(1e-12));
  CHECK(r.log_weight() == a.log_weight());
}

TEST_CASE("interventional do forces the value in every phase") {
  const Program p = gaussian_program(DoType::interventional);
  const Query q = discover(p);
  CHECK_FALSE((q.needs_replay() && q.has_counterfactual_interventions()));
  const Trace a = abduction_sample(p, q, 2, 0);
  CHECK(a.find(Address("Z"))->value == Value(kForcedZ));
  CHECK(a.find(Address("Z"))->role == Role::intervened);
  CHECK(weight_contribution(*a.find(Address("Z"))) == 0.0);
}

TEST_CASE("predict phase selection") {
  const Program obs = gaussian_program(DoType::counterfactual, true, false);
  const InferenceResult r = run_inference(obs, run_options(50, 4));
  for (const auto& row : r.predictions) CHECK(row[0] == Value(kObservedY));

  const Program cf = gaussian_program(DoType::counterfactual, true, true);
  const InferenceResult c = run_inference(cf, run_options(50, 4));
  CHECK_FALSE(c.predictions[0][0] == Value(kObservedY));
  CHECK(c.program_evaluations == 101);
}

TEST_CASE("no interventions: counterfactual and observational predictions coincide") {
  const InferenceResult cf = run_inference(
      gaussian_program(DoType::counterfactual, false, true), run_options(500, 21));
  const InferenceResult obs = run_inference(
      gaussian_program(DoType::counterfactual, false, false), run_options(500, 21));
  REQUIRE(cf.predictions.size() == obs.predictions.size());
  for (std::size_t i = 0; i < cf.predictions.size(); ++i) {
    REQUIRE(cf.predictions[i][0] == obs.predictions[i][0]);
    REQUIRE(cf.log_weights[i] == obs.log_weights[i]);
  }
  CHECK(estimate_expectation(cf, "y") == estimate_expectation(obs, "y"));
  CHECK(obs.program_evaluations == 501);
  CHECK(cf.program_evaluations == 1001);
}

TEST_CASE("empty intervention set replays the abducted trace") {
  const Program p = gaussian_program(DoType::counterfactual, false, true);
  const Query q = discover(p);
  for (std::uint64_t i = 0; i < 25; ++i) {
    const Trace a = abduction_sample(p, q, 77, i);
    const Trace r = counterfactual_replay(a, q, p, 77, i);
    REQUIRE(r.size() == a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(r.entries()[k].address == a.entries()[k].address);
      CHECK(r.entries()[k].value == a.entries()[k].value);
    }
    CHECK(r.log_weight() == a.log_weight());
  }
}

TEST_CASE("CF intervention without a counterfactual predict leaves non-descendants alone") {
  const Program p = [](Context& ctx) {
    const ErpRef x = ctx.sample(normal(0, 1), "X");
    const ErpRef z = ctx.sample(normal(0, 1), "Z");
    const ErpRef y = ctx.sample(observable_normal(x.real() + z.real(), 1.0).depends_on({x, z}), "Y");
    ctx.observe(y, 0.5);
    ctx.do_(z, 3.0);
    ctx.predict("x", x.value(), false);
  };
  const InferenceResult r = run_inference(p, run_options(200, 6));
  CHECK(r.program_evaluations == 401);
  const InferenceResult r2 = run_inference(p, run_options(200, 6));
  CHECK(estimate_expectation(r, "x") == estimate_expectation(r2, "x"));
}

TEST_CASE("two-node model recovers 0.8") {
  const InferenceResult r = run_inference(two_node_program(), run_options(50000, 2024));
  CHECK(std::abs(estimate_expectation(r, "y") - 0.8) < 0.01);
}

TEST_CASE("Gaussian counterfactual expectation") {
  const InferenceResult r = run_inference(gaussian_program(), run_options(20000, 13));
  const double expected = gaussian_counterfactual_mean(kObservedY, kForcedZ);
  CHECK(expected == doctest::Approx(-1.4951).epsilon(1e-4));
  CHECK(std::abs(estimate_expectation(r, "y") - expected) < 0.05);
}

TEST_CASE("CF and IV agree without evidence") {
  auto program = [](DoType type, bool cf_predict) {
    return [=](Context& ctx) {
      const ErpRef x = ctx.sample(observable_bernoulli(false, 0.4), "X");
      const ErpRef y = ctx.sample(observable_bernoulli(x.boolean(), 0.25).depends_on({x}), "Y");
      ctx.do_(x, true, type);
      ctx.predict("y", y.value(), cf_predict);
    };
  };
  constexpr std::size_t kN = 20000;
  const double cf = estimate_expectation(
      run_inference(program(DoType::counterfactual, true), run_options(kN, 1)), "y");
  const double iv = estimate_expectation(
      run_inference(program(DoType::interventional, false), run_options(kN, 2)), "y");
  const double se = std::sqrt(2 * 0.75 * 0.25 / kN);
  CHECK(std::abs(cf - iv) < 3 * se);
  CHECK(std::abs(cf - 0.75) < 3 * std::sqrt(0.75 * 0.25 / kN));
}

TEST_CASE("statement errors") {
  SUBCASE("observing a plain continuous procedure") {
    const Program p = [](Context& ctx) { ctx.observe(ctx.sample(normal(0, 1), "X"), 0.3); };
    CHECK(code_of([&] { discover(p); }) == ErrorCode::unobservable_procedure);
  }
  SUBCASE("observing a plain Bernoulli with parents") {
    const Program p = [](Context& ctx) {
      const ErpRef a = ctx.sample(bernoulli(0.5), "A");
      ctx.observe(ctx.sample(bernoulli(a.boolean() ? 0.9 : 0.1).depends_on({a}), "B"), true);
    };
    CHECK(code_of([&] { discover(p); }) == ErrorCode::implicit_noise);
  }
  SUBCASE("intervening twice") {
    const Program p = [](Context& ctx) {
      const ErpRef a = ctx.sample(observable_bernoulli(false, 0.5), "A");
      ctx.do_(a, true);
      ctx.do_(a, false);
    };
    CHECK(code_of([&] { discover(p); }) == ErrorCode::already_intervened);
  }
  SUBCASE("observing an interventionally forced address") {
    const Program p = [](Context& ctx) {
      const ErpRef a = ctx.sample(observable_bernoulli(false, 0.5), "A");
      ctx.do_(a, true, DoType::interventional);
      ctx.observe(a, true);
    };
    CHECK(code_of([&] { discover(p); }) == ErrorCode::already_intervened);
  }
  SUBCASE("counterfactual do on a plain stochastic child") {
    const Program p = [](Context& ctx) {
      const ErpRef a = ctx.sample(normal(0, 1), "A");
      ctx.do_(ctx.sample(normal(a.real(), 1).depends_on({a}), "B"), 0.0);
    };
    CHECK(code_of([&] { discover(p); }) == ErrorCode::implicit_noise);
  }
  SUBCASE("duplicate predict label") {
    const Program p = [](Context& ctx) {
      ctx.predict("k", Value(1));
      ctx.predict("k", Value(2));
    };
    CHECK(code_of([&] { discover(p); }) == ErrorCode::duplicate_label);
  }
  SUBCASE("wrong value type") {
    const Program p = [](Context& ctx) {
      ctx.observe(ctx.sample(observable_bernoulli(false, 0.5), "A"), 0.5);
    };
    CHECK(code_of([&] { discover(p); }) == ErrorCode::type_mismatch);
  }
  SUBCASE("undeclared parent") {
    const Program p = [](Context& ctx) {
      ctx.sample(normal(0, 1).depends_on({Address("ghost")}), "A");
    };
    CHECK_THROWS_AS(discover(p), Error);
  }
}

TEST_CASE("stochastic descendant of an intervention needs explicit noise") {
  const Program p = [](Context& ctx) {
    const ErpRef a = ctx.sample(normal(0, 1), "A");
    const ErpRef b = ctx.sample(normal(a.real(), 1).depends_on({a}), "B");
    const ErpRef c = ctx.sample(observable_normal(b.real(), 1).depends_on({b}), "C");
    ctx.observe(c, 0.2);
    ctx.do_(a, 2.0);
    ctx.predict("b", b.value());
  };
  try {
    run_inference(p, run_options(10, 1));
    FAIL("expected implicit_noise");
  } catch (const SampleError& e) {
    CHECK(e.code() == ErrorCode::implicit_noise);
    CHECK(e.sample_index() == 0);
  }
  RunOptions opts = run_options(10, 1);
  opts.engine.resample_implicit_noise = true;
  const InferenceResult r = run_inference(p, opts);
  CHECK(r.n_samples == 10);
}

TEST_CASE("replay detects a stale trace") {
  const Program p = gaussian_program();
  const Query q = discover(p);
  const Trace a = abduction_sample(p, q, 1, 0);
  const Program other = [](Context& ctx) {
    ctx.sample(normal(0, 1), "W");
  };
  try {
    counterfactual_replay(a, q, other, 1, 0);
    FAIL("expected stale trace");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::stale_trace);
  }
}

TEST_CASE("new control flow after an intervention samples from the prior") {
  const Program p = [](Context& ctx) {
    const ErpRef a = ctx.sample(observable_bernoulli(false, 0.5), "A");
    ctx.observe(a, false);
    ctx.do_(a, true);
    if (a.boolean()) {
      ctx.predict("extra", ctx.sample(normal(5, 1).depends_on({a}), "branch").value());
    } else {
      ctx.predict("extra", Value(0.0));
    }
  };
  const InferenceResult r = run_inference(p, run_options(4000, 3));
  CHECK(std::abs(estimate_expectation(r, "extra") - 5.0) < 0.1);
}

TEST_CASE("program exceptions carry the sample index") {
  const Program p = [](Context& ctx) {
    if (ctx.phase() == Phase::abduction && ctx.sample_index() == 37) {
      throw std::runtime_error("boom");
    }
    ctx.predict("v", Value(1), false);
  };
  try {
    run_inference(p, run_options(100, 0, Mode::eager, 4));
    FAIL("expected failure");
  } catch (const SampleError& e) {
    CHECK(e.sample_index() == 37);
    CHECK(e.code() == ErrorCode::program_error);
  }
}

TEST_CASE("lazy gates") {
  SUBCASE("memoization invokes the thunk once") {
    int calls = 0;
    const Program p = [&calls](Context& ctx) {
      auto thunk = [&] {
        ++calls;
        return ctx.sample(normal(0, 1), "M");
      };
      const ErpRef a = ctx.compute_if_necessary(Address("M"), thunk);
      const ErpRef b = ctx.compute_if_necessary(Address("M"), thunk);
      CHECK(a.value() == b.value());
    };
    calls = 0;
    discover(p);
    CHECK(calls == 1);
  }
  SUBCASE("intervened address in lazy replay skips the thunk") {
    int replay_calls = 0;
    const Program p = [&replay_calls](Context& ctx) {
      const ErpRef x = ctx.compute_if_necessary(Address("X"), [&] {
        if (ctx.phase() == Phase::replay) ++replay_calls;
        return ctx.sample(observable_bernoulli(false, 0.5), "X");
      });
      const ErpRef y = ctx.sample(observable_bernoulli(x.boolean(), 0.2).depends_on({x}), "Y");
      if (ctx.if_observe_block()) ctx.observe(y, true);
      if (ctx.if_do_block()) ctx.do_(x, true);
      ctx.predict("y", y.value());
    };
    RunOptions o = run_options(200, 9, Mode::lazy);
    const InferenceResult r = run_inference(p, o);
    CHECK(replay_calls == 0);
    const InferenceResult e = run_inference(two_node_program(), run_options(200, 9));
    CHECK(estimate_expectation(r, "y") == estimate_expectation(e, "y"));
  }
  SUBCASE("gate values per phase") {
    EngineOptions lazy;
    lazy.mode = Mode::lazy;
    const Query q;
    CHECK(Context(Phase::discovery, nullptr, nullptr, 0, 0, lazy).if_observe_block());
    CHECK(Context(Phase::abduction, &q, nullptr, 0, 0, lazy).if_observe_block());
    CHECK_FALSE(Context(Phase::replay, &q, nullptr, 0, 0, lazy).if_observe_block());
    CHECK(Context(Phase::discovery, nullptr, nullptr, 0, 0, lazy).if_do_block());
    CHECK_FALSE(Context(Phase::abduction, &q, nullptr, 0, 0, lazy).if_do_block());
    CHECK_FALSE(Context(Phase::replay, &q, nullptr, 0, 0, lazy).if_do_block());
    const EngineOptions eager;
    CHECK(Context(Phase::replay, &q, nullptr, 0, 0, eager).if_observe_block());
    CHECK(Context(Phase::replay, &q, nullptr, 0, 0, eager).if_do_block());
  }
}

TEST_CASE("estimate_expectation examples") {
  const std::array<double, 2> v{1.0, 0.0};
  const std::array<double, 2> lw{std::log(3.0), std::log(1.0)};
  CHECK(estimate_expectation(v, lw) == doctest::Approx(0.75).epsilon(1e-15));
  const std::array<double, 3> c{2.5, 2.5, 2.5};
  const std::array<double, 3> w{-700.0, 3.0, -kInf};
  CHECK(estimate_expectation(c, w) == 2.5);
  const std::array<double, 2> dead{-kInf, -kInf};
  CHECK(code_of([&] { estimate_expectation(v, dead); }) == ErrorCode::no_surviving_samples);
  // Large log weights do not overflow.
  const std::array<double, 2> big{1000.0, 1000.0 + std::log(3.0)};
  CHECK(estimate_expectation(v, big) == doctest::Approx(0.25));
}

TEST_CASE("ess examples") {
  const std::vector<double> equal(10, -2.0);
  CHECK(ess(equal) == doctest::Approx(10.0).epsilon(1e-14));
  const std::array<double, 3> single{0.0, -kInf, -kInf};
  CHECK(ess(single) == 1.0);
  const std::array<double, 3> w{std::log(2.0), 0.0, 0.0};
  CHECK(ess(w) == doctest::Approx(16.0 / 6.0).epsilon(1e-14));
  const std::array<double, 2> dead{-kInf, -kInf};
  CHECK(ess(dead) == 0.0);
}

TEST_CASE("results do not depend on the worker count") {
  const InferenceResult one = run_inference(gaussian_program(), run_options(3000, 5, Mode::eager, 1));
  for (unsigned workers : {4u, 16u}) {
    const InferenceResult many =
        run_inference(gaussian_program(), run_options(3000, 5, Mode::eager, workers));
    CHECK(many.log_weights == one.log_weights);
    CHECK(many.predictions == one.predictions);
    CHECK(estimate_expectation(many, "y") == estimate_expectation(one, "y"));
  }
}

TEST_CASE("dependency audit") {
  const Program sound = [](Context& ctx) {
    const ErpRef a = ctx.sample(normal(0, 1), "A");
    ctx.sample(observable_normal(a.real(), 1).depends_on({a}), "B");
  };
  CHECK(audit_dependencies(sound, 1, 3).empty());
  const Program unsound = [](Context& ctx) {
    const ErpRef a = ctx.sample(normal(0, 1), "A");
    ctx.sample(observable_normal(a.real(), 1), "B");
  };
  const auto v = audit_dependencies(unsound, 1, 3);
  REQUIRE_FALSE(v.empty());
  CHECK(v.front().perturbed == Address("A"));
  CHECK(v.front().changed == Address("B"));
  RunOptions o = run_options(10, 1);
  o.audit_dependencies = true;
  CHECK_THROWS_AS(run_inference(unsound, o), Error);
  CHECK_NOTHROW(run_inference(sound, o));
}

TEST_CASE("proposal overrides reweight correctly") {
  const Program p = [](Context& ctx) {
    const ErpRef x = ctx.sample(normal(0, 1).with_proposal({.mean = 1.5}), "X");
    ctx.predict("x", x.value(), false);
  };
  const InferenceResult r = run_inference(p, run_options(50000, 17));
  CHECK(std::abs(estimate_expectation(r, "x")) < 0.05);
}

TEST_CASE("real Delta observations compare exactly unless a tolerance is set") {
  const Program p = [](Context& ctx) {
    const ErpRef d = ctx.sample(delta(Value(0.1 + 0.2)), "D");
    ctx.observe(d, 0.3);
    ctx.predict("d", d.value(), false);
  };
  const InferenceResult exact = run_inference(p, run_options(5, 1));
  CHECK(exact.degenerate);
  RunOptions o = run_options(5, 1);
  o.engine.delta_tolerance = 1e-12;
  CHECK(run_inference(p, o).n_rejected == 0);
}
