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

#include "twinworld/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "twinworld/error.hpp"
#include "twinworld/exact.hpp"
#include "twinworld/random.hpp"

namespace twinworld {

namespace {

constexpr std::size_t kMaxRegenerations = 1000;
constexpr const char* kTargetLabel = "target";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_unsigned(const std::string& field, std::size_t line_no) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::schema_violation,
                "csv line " + std::to_string(line_no) + ": bad integer \"" + field + "\"");
  }
  return value;
}

double parse_double(const std::string& field, std::size_t line_no) {
  char* end = nullptr;
  const double value = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) {
    throw Error(ErrorCode::schema_violation,
                "csv line " + std::to_string(line_no) + ": bad number \"" + field + "\"");
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

std::uint64_t engine_seed_for(std::uint64_t seed, std::size_t model_id) noexcept {
  return mix64(seed ^ mix64(0x5EED000000000000ULL + model_id));
}

BenchCase make_bench_case(std::uint64_t seed, std::size_t model_id,
                          const GeneratorConfig& config, std::ostream* log) {
  BenchCase bench_case;
  bench_case.model_id = model_id;
  bench_case.engine_seed = engine_seed_for(seed, model_id);
  for (std::size_t sub = 0; sub < kMaxRegenerations; ++sub) {
    RandomStream rng = rng_for_key(seed, model_id, "model/" + std::to_string(sub),
                                   StreamPurpose::generator);
    ScmSpec scm = generate_scm(rng, config);
    try {
      bench_case.query = generate_query(scm, rng, config);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::degenerate_graph) throw;
      ++bench_case.regenerations;
      if (log != nullptr) {
        *log << "model " << model_id << ": " << e.what() << ", regenerating with sub-seed "
             << sub + 1 << '\n';
      }
      continue;
    }
    bench_case.scm = std::move(scm);
    bench_case.exact_value = exact_counterfactual(bench_case.scm, bench_case.query);
    return bench_case;
  }
  throw Error(ErrorCode::degenerate_graph,
              "model " + std::to_string(model_id) + ": no usable graph after " +
                  std::to_string(kMaxRegenerations) + " attempts");
}

std::vector<BenchCase> make_corpus(std::uint64_t seed, std::size_t n_models,
                                   const GeneratorConfig& config, std::ostream* log) {
  std::vector<BenchCase> corpus;
  corpus.reserve(n_models);
  for (std::size_t m = 0; m < n_models; ++m) {
    corpus.push_back(make_bench_case(seed, m, config, log));
  }
  return corpus;
}

BenchRow run_case(const BenchCase& bench_case, Mode mode, std::size_t n_samples,
                  unsigned workers, bool record_timing) {
  RunOptions options;
  options.n_samples = n_samples;
  options.seed = bench_case.engine_seed;
  options.workers = workers;
  options.engine.mode = mode;
  const InferenceResult result = run_inference(
      make_scm_program(bench_case.scm, bench_case.query, kTargetLabel), options);
  BenchRow row;
  row.model_id = bench_case.model_id;
  row.n_samples = n_samples;
  row.engine = std::string(to_string(mode));
  row.estimate = estimate_expectation(result, kTargetLabel);
  row.exact_value = bench_case.exact_value;
  row.abs_error = std::abs(row.estimate - row.exact_value);
  row.ess = ess(result.log_weights);
  row.n_rejected = result.n_rejected;
  row.wall_seconds = record_timing ? result.wall_seconds : 0.0;
  row.seed = bench_case.engine_seed;
  return row;
}

std::vector<BenchRow> run_bench(const BenchConfig& config, std::ostream* log) {
  GeneratorConfig gen;
  gen.n_blocks = config.n_blocks;
  gen.edge_density = config.edge_density;
  if (config.n_blocks > kMaxEnumeratedVariables) {
    throw Error(ErrorCode::invalid_parameter,
                "exact ground truth needs at most " +
                    std::to_string(kMaxEnumeratedVariables) + " blocks");
  }
  const auto corpus = make_corpus(config.seed, config.n_models, gen, log);
  std::vector<BenchRow> rows;
  for (const BenchCase& c : corpus) {
    BenchRow exact;
    exact.model_id = c.model_id;
    exact.engine = "exact";
    exact.estimate = c.exact_value;
    exact.exact_value = c.exact_value;
    exact.seed = c.engine_seed;
    rows.push_back(exact);
    for (std::size_t n : config.samples) {
      for (Mode mode : {Mode::eager, Mode::lazy}) {
        rows.push_back(run_case(c, mode, n, config.workers, config.record_timing));
      }
    }
  }
  std::sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return std::tie(a.model_id, a.engine, a.n_samples) <
           std::tie(b.model_id, b.engine, b.n_samples);
  });
  return rows;
}

double percentile(std::vector<double> values, double fraction) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(fraction, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<SummaryRow> summarize(std::span<const BenchRow> rows) {
  std::map<std::pair<std::string, std::size_t>, std::vector<const BenchRow*>> groups;
  for (const BenchRow& row : rows) {
    if (row.engine == "exact") continue;
    groups[{row.engine, row.n_samples}].push_back(&row);
  }
  std::vector<SummaryRow> out;
  for (const auto& [key, members] : groups) {
    SummaryRow s;
    s.engine = key.first;
    s.n_samples = key.second;
    s.n_models = members.size();
    std::vector<double> errors;
    double wall = 0.0;
    for (const BenchRow* r : members) {
      errors.push_back(r->abs_error);
      s.mean_abs_error += r->abs_error;
      wall += r->n_samples > 0 ? r->wall_seconds / static_cast<double>(r->n_samples) : 0.0;
    }
    s.mean_abs_error /= static_cast<double>(members.size());
    s.mean_wall_per_sample = wall / static_cast<double>(members.size());
    s.p10_abs_error = percentile(errors, 0.1);
    s.p90_abs_error = percentile(std::move(errors), 0.9);
    out.push_back(std::move(s));
  }
  return out;
}

void write_csv(std::ostream& os, std::span<const BenchRow> rows) {
  os << kBenchCsvHeader << '\n';
  for (const BenchRow& r : rows) {
    os << r.model_id << ',' << r.n_samples << ',' << r.engine << ','
       << format_double(r.estimate) << ',' << format_double(r.exact_value) << ','
       << format_double(r.abs_error) << ',' << format_double(r.ess) << ','
       << r.n_rejected << ',' << format_double(r.wall_seconds) << ',' << r.seed << '\n';
  }
}

std::vector<BenchRow> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kBenchCsvHeader) {
    throw Error(ErrorCode::schema_violation, "csv: missing or unexpected header");
  }
  std::vector<BenchRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10) {
      throw Error(ErrorCode::schema_violation,
                  "csv line " + std::to_string(line_no) + ": expected 10 fields");
    }
    BenchRow r;
    r.model_id = parse_unsigned<std::size_t>(f[0], line_no);
    r.n_samples = parse_unsigned<std::size_t>(f[1], line_no);
    r.engine = f[2];
    r.estimate = parse_double(f[3], line_no);
    r.exact_value = parse_double(f[4], line_no);
    r.abs_error = parse_double(f[5], line_no);
    r.ess = parse_double(f[6], line_no);
    r.n_rejected = parse_unsigned<std::size_t>(f[7], line_no);
    r.wall_seconds = parse_double(f[8], line_no);
    r.seed = parse_unsigned<std::uint64_t>(f[9], line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows) {
  os << "engine,n_samples,n_models,mean_abs_error,p10_abs_error,p90_abs_error,"
        "mean_wall_per_sample\n";
  for (const SummaryRow& s : rows) {
    os << s.engine << ',' << s.n_samples << ',' << s.n_models << ','
       << format_double(s.mean_abs_error) << ',' << format_double(s.p10_abs_error) << ','
       << format_double(s.p90_abs_error) << ',' << format_double(s.mean_wall_per_sample)
       << '\n';
  }
}

}  // namespace twinworld
