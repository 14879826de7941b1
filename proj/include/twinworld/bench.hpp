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

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "twinworld/engine.hpp"
#include "twinworld/scm.hpp"

namespace twinworld {

/// One line of the benchmark CSV. Columns appear in field order.
struct BenchRow {
  std::size_t model_id = 0;
  std::size_t n_samples = 0;
  std::string engine;  // eager, lazy or exact
  double estimate = 0.0;
  double exact_value = 0.0;
  double abs_error = 0.0;
  double ess = 0.0;
  std::size_t n_rejected = 0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr const char* kBenchCsvHeader =
    "model_id,n_samples,engine,estimate,exact_value,abs_error,ess,"
    "n_rejected,wall_seconds,seed";

struct BenchCase {
  std::size_t model_id = 0;
  ScmSpec scm;
  BenchQuery query;
  std::uint64_t engine_seed = 0;
  double exact_value = 0.0;
  std::size_t regenerations = 0;  // degenerate graphs skipped
};

struct BenchConfig {
  std::size_t n_models = 50;
  std::size_t n_blocks = 15;
  std::vector<std::size_t> samples{100, 1000, 5000};
  std::uint64_t seed = 0;
  unsigned workers = 1;
  double edge_density = 0.3;
  bool record_timing = true;  // false writes wall_seconds = 0
};

/// Model `model_id` of the corpus for `seed`: SCM, query and exact value.
/// Degenerate graphs are regenerated under the next sub-seed; each retry is
/// logged to `log` when given.
BenchCase make_bench_case(std::uint64_t seed, std::size_t model_id,
                          const GeneratorConfig& config,
                          std::ostream* log = nullptr);

std::vector<BenchCase> make_corpus(std::uint64_t seed, std::size_t n_models,
                                   const GeneratorConfig& config,
                                   std::ostream* log = nullptr);

/// Engine seed used for a model of the corpus.
std::uint64_t engine_seed_for(std::uint64_t seed, std::size_t model_id) noexcept;

/// Runs one case with the importance sampler and returns its row.
BenchRow run_case(const BenchCase& bench_case, Mode mode, std::size_t n_samples,
                  unsigned workers, bool record_timing = true);

/// Full study: exact row plus eager and lazy rows per sample budget for
/// every model, sorted by (model_id, engine, n_samples).
std::vector<BenchRow> run_bench(const BenchConfig& config,
                                std::ostream* log = nullptr);

struct SummaryRow {
  std::string engine;
  std::size_t n_samples = 0;
  std::size_t n_models = 0;
  double mean_abs_error = 0.0;
  double p10_abs_error = 0.0;
  double p90_abs_error = 0.0;
  double mean_wall_per_sample = 0.0;
};

/// Mean and 10th/90th percentiles (linear interpolation) of abs_error per
/// (engine, n_samples), excluding exact rows.
std::vector<SummaryRow> summarize(std::span<const BenchRow> rows);

/// Percentile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double fraction);

void write_csv(std::ostream& os, std::span<const BenchRow> rows);
std::vector<BenchRow> read_csv(std::istream& is);
void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace twinworld
