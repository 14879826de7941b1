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

// Shared programs and numeric helpers for the test suites.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>

#include "twinworld/engine.hpp"

namespace twinworld::testing {

inline constexpr double kObservedY = 1.2342;
inline constexpr double kForcedZ = -2.5236;

/// X ~ N(0,1), Z ~ N(0,1), Y = ObservableNormal(X + Z, 2). Observes Y and
/// applies do(Z) with the given type; predicts Y under label "y".
inline Program gaussian_program(DoType type = DoType::counterfactual,
                                bool intervene = true,
                                bool counterfactual_predict = true) {
  return [=](Context& ctx) {
    const ErpRef x = ctx.sample(normal(0.0, 1.0), "X");
    const ErpRef z = ctx.sample(normal(0.0, 1.0), "Z");
    const ErpRef y =
        ctx.sample(observable_normal(x.real() + z.real(), 2.0).depends_on({x, z}), "Y");
    ctx.observe(y, kObservedY);
    if (intervene) ctx.do_(z, kForcedZ, type);
    ctx.predict("y", y.value(), counterfactual_predict);
  };
}

/// Closed-form E[Y' | Y = y, do(Z = z)] for the model above.
inline double gaussian_counterfactual_mean(double y, double z) {
  return 5.0 * y / 6.0 + z;
}

/// Two-node model: X ~ Bern(0.5) as an observable prior, Y = X xor eps,
/// eps ~ Bern(0.2); observe Y = 1, do(X = 1) counterfactually, predict Y.
inline Program two_node_program() {
  return [](Context& ctx) {
    const ErpRef x = ctx.sample(observable_bernoulli(false, 0.5), "X");
    const ErpRef y =
        ctx.sample(observable_bernoulli(x.boolean(), 0.2).depends_on({x}), "Y");
    ctx.observe(y, true);
    ctx.do_(x, true);
    ctx.predict("y", y.value());
  };
}

/// Composite Simpson integral of f over [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace twinworld::testing
