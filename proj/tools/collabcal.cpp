/*
 * Copyright 2026 The collabcal Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: run, report, select-agents, synth.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "collabcal/config.hpp"
#include "collabcal/dataset.hpp"
#include "collabcal/errors.hpp"
#include "collabcal/pipeline.hpp"
#include "collabcal/report.hpp"

namespace {

using namespace collabcal;

void print_summary(const char* label, const metrics::CalibrationReport& r) {
  auto show = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("n/a"); };
  std::printf("%-5s n=%zu failures=%zu accuracy=%s ece_abs=%s ece_sq=%s brier=%s\n", label, r.n,
              r.failures, show(r.accuracy).c_str(), show(r.ece_abs).c_str(), show(r.ece_sq).c_str(),
              show(r.brier).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free confidence calibration of LLM answers by multi-agent deliberation"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  std::string dataset_path, config_path, out_dir, in_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallelism;
  std::optional<std::string> backend;
  std::optional<std::size_t> bins;

  auto* run = app.add_subcommand("run", "Run the pipeline over a dataset");
  run->add_option("--dataset", dataset_path, "JSONL dataset")->required()->check(CLI::ExistingFile);
  run->add_option("--config", config_path, "key = value config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--parallelism", parallelism, "Questions processed concurrently");
  run->add_option("--backend", backend, "simulated|http")->check(CLI::IsMember({"simulated", "http"}));

  auto* rep = app.add_subcommand("report", "Recompute metrics from a run directory");
  rep->add_option("--in", in_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--bins", bins, "Number of confidence bins")->check(CLI::PositiveNumber);

  auto* sel = app.add_subcommand("select-agents", "Run agent selection and print it as JSON");
  sel->add_option("--dataset", dataset_path, "JSONL dataset")->required()->check(CLI::ExistingFile);
  sel->add_option("--config", config_path, "key = value config file")->required()->check(CLI::ExistingFile);

  SynthOptions synth;
  std::string synth_out;
  auto* syn = app.add_subcommand("synth", "Write a synthetic dataset for the simulated backend");
  syn->add_option("--test", synth.test, "Test questions");
  syn->add_option("--validation", synth.validation, "Validation questions");
  syn->add_option("--seed", synth.seed, "Generator seed");
  syn->add_option("--out", synth_out, "Output JSONL path")->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run) {
      auto config = load_config(config_path);
      if (seed) config.seed = *seed;
      if (parallelism) config.parallelism = *parallelism;
      if (backend) apply_config_value(config, "backend", *backend);
      if (!out_dir.empty()) config.out = out_dir;
      if (config.out.empty()) throw ConfigError("no output directory (--out or out = ...)");
      config.validate();
      const auto dataset = ingest(dataset_path);
      const auto result = run_pipeline(config, dataset);
      write_run(config.out, result, config.bins);
      print_summary("pre", result.pre);
      print_summary("post", result.post);
    } else if (*rep) {
      const auto r = report(in_dir, bins);
      print_summary("pre", r.pre);
      print_summary("post", r.post);
    } else if (*sel) {
      const auto config = load_config(config_path);
      const auto dataset = ingest(dataset_path);
      Engine engine(config, dataset);
      std::cout << selection_json(engine.select(dataset)).dump(2) << "\n";
    } else if (*syn) {
      write_file(synth_out, to_jsonl(synth_dataset(synth)));
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "dataset error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
