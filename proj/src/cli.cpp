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

#include "twinworld/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "twinworld/bench.hpp"
#include "twinworld/error.hpp"
#include "twinworld/exact.hpp"
#include "twinworld/scm_json.hpp"

namespace twinworld {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitDegenerate = 2;

struct RunArgs {
  std::string model;
  std::string query;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string engine = "lazy";
  double delta_tolerance = 0.0;
  std::string dump_traces;
};

struct BenchArgs {
  BenchConfig config;
  std::string out;
  std::string summary;
  bool no_timing = false;
};

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::no_surviving_samples:
    case ErrorCode::impossible_evidence:
      return kExitDegenerate;
    default:
      return kExitInvalid;
  }
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  const ScmSpec scm = scm_from_json(read_json_file(args.model));
  const BenchQuery query = query_from_json(read_json_file(args.query));
  query.validate(scm);

  nlohmann::json doc;
  if (args.engine == "exact") {
    const auto start = std::chrono::steady_clock::now();
    doc["estimate"] = exact_counterfactual(scm, query);
    doc["ess"] = nullptr;
    doc["n_rejected"] = 0;
    doc["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    doc["n_samples"] = 0;
    doc["seed"] = args.seed;
    out << doc.dump() << '\n';
    return kExitOk;
  }

  RunOptions options;
  options.n_samples = args.samples;
  options.seed = args.seed;
  options.workers = args.workers;
  options.engine.mode = args.engine == "eager" ? Mode::eager : Mode::lazy;
  options.engine.delta_tolerance = args.delta_tolerance;
  options.keep_traces = !args.dump_traces.empty();
  const InferenceResult result = run_inference(make_scm_program(scm, query), options);

  if (options.keep_traces) {
    std::ofstream dump(args.dump_traces);
    if (!dump) {
      err << "error: cannot write " << args.dump_traces << '\n';
      return kExitInvalid;
    }
    nlohmann::json traces = nlohmann::json::array();
    for (std::size_t i = 0; i < result.traces.size(); ++i) {
      const auto& [abducted, replayed] = result.traces[i];
      traces.push_back({{"sample", i},
                        {"abducted", trace_to_json(abducted)},
                        {"replayed", replayed ? trace_to_json(*replayed) : nullptr}});
    }
    dump << traces.dump() << '\n';
  }

  if (result.degenerate) {
    err << "error: degenerate posterior: all " << result.n_samples
        << " samples were rejected by the evidence\n";
    return kExitDegenerate;
  }
  doc["estimate"] = estimate_expectation(result, "target");
  doc["ess"] = ess(result.log_weights);
  doc["n_rejected"] = result.n_rejected;
  doc["wall_seconds"] = result.wall_seconds;
  doc["n_samples"] = result.n_samples;
  doc["seed"] = args.seed;
  out << doc.dump() << '\n';
  return kExitOk;
}

int cmd_bench(BenchArgs args, std::ostream& out, std::ostream& err) {
  args.config.record_timing = !args.no_timing;
  const auto rows = run_bench(args.config, &err);
  {
    std::ofstream csv(args.out, std::ios::binary);
    if (!csv) {
      err << "error: cannot write " << args.out << '\n';
      return kExitInvalid;
    }
    write_csv(csv, rows);
  }
  const auto summary = summarize(rows);
  write_summary_csv(out, summary);
  if (!args.summary.empty()) {
    std::ofstream s(args.summary, std::ios::binary);
    write_summary_csv(s, summary);
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Counterfactual inference on structural causal models"};
  app.require_subcommand(1);

  RunArgs run;
  CLI::App* run_cmd = app.add_subcommand("run", "Answer one counterfactual query");
  run_cmd->add_option("--model", run.model, "Model JSON file")->required();
  run_cmd->add_option("--query", run.query, "Query JSON file")->required();
  run_cmd->add_option("--samples", run.samples, "Number of samples")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", run.seed, "Random seed");
  run_cmd->add_option("--workers", run.workers, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_option("--engine", run.engine, "eager, lazy or exact")
      ->check(CLI::IsMember({"eager", "lazy", "exact"}));
  run_cmd->add_option("--delta-tolerance", run.delta_tolerance,
                      "Tolerance for real-valued Delta observations")
      ->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--dump-traces", run.dump_traces, "Write traces as JSON");

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Run the benchmark study");
  bench_cmd->add_option("--models", bench.config.n_models, "Number of models");
  bench_cmd->add_option("--blocks", bench.config.n_blocks, "Blocks per model")
      ->check(CLI::Range(2, 25));
  bench_cmd->add_option("--samples", bench.config.samples, "Comma-separated sample budgets")
      ->delimiter(',');
  bench_cmd->add_option("--seed", bench.config.seed, "Corpus seed");
  bench_cmd->add_option("--out", bench.out, "Output CSV")->required();
  bench_cmd->add_option("--summary", bench.summary, "Also write the summary CSV here");
  bench_cmd->add_option("--workers", bench.config.workers, "Worker threads")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--edge-density", bench.config.edge_density, "Edge probability")
      ->check(CLI::Range(0.0, 1.0));
  bench_cmd->add_flag("--no-timing", bench.no_timing,
                      "Write wall_seconds as 0 for byte-identical output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  try {
    if (*run_cmd) return cmd_run(run, out, err);
    return cmd_bench(std::move(bench), out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}

}  // namespace twinworld
