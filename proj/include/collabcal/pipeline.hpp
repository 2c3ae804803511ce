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

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "collabcal/config.hpp"
#include "collabcal/dataset.hpp"
#include "collabcal/ensemble.hpp"
#include "collabcal/metrics.hpp"
#include "collabcal/search.hpp"
#include "collabcal/transcript.hpp"
#include "json.hpp"

namespace collabcal {

// Providers, prompts, search and judge wired up from a config. Owns
// everything the AgentContext points at.
class Engine {
 public:
  Engine(const RunConfig& config, const std::vector<DatasetRecord>& dataset);
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const RunConfig& config() const { return config_; }
  const std::vector<Backbone>& backbones() const { return backbones_; }
  const AgentContext& context() const { return ctx_; }
  const EquivalenceJudge& judge() const { return *judge_; }
  const std::vector<AgentProfile>& deliberators() const { return deliberators_; }
  const AgentProfile* verifier() const { return verifier_ ? &*verifier_ : nullptr; }

  // Task-level selection on the validation split, or an even split over the
  // configured skills when selection is off.
  std::vector<BackboneSelection> select(const std::vector<DatasetRecord>& dataset) const;

  // Full two-stage pipeline on one question. Never throws: failures are
  // recorded in the transcript.
  QuestionTranscript run_question(const Question& question,
                                  std::span<const AgentProfile> experts) const;

 private:
  RunConfig config_;
  PromptRegistry prompts_;
  std::unique_ptr<SearchProvider> search_;
  std::vector<Backbone> backbones_;
  std::optional<EquivalenceJudge> judge_;
  std::vector<AgentProfile> deliberators_;
  std::optional<AgentProfile> verifier_;
  AgentContext ctx_;
};

// Even split of each backbone's share over the skills.
std::vector<BackboneSelection> uniform_selection(std::span<const Skill> skills,
                                                 std::span<const Backbone> backbones,
                                                 std::size_t total_slots, double tau);

nlohmann::json selection_json(const std::vector<BackboneSelection>& selection);

struct RunResult {
  std::vector<BackboneSelection> selection;
  // Sorted by question id.
  std::vector<QuestionTranscript> transcripts;
  metrics::CalibrationReport pre;
  metrics::CalibrationReport post;
};

// Test split questions fan out over `config.parallelism` workers.
RunResult run_pipeline(const RunConfig& config, const std::vector<DatasetRecord>& dataset);

// Writes transcripts/, predictions_*.jsonl, metrics.json and reliability_*.csv.
void write_run(const std::filesystem::path& out_dir, const RunResult& result, std::size_t bins);

// Report files shared by `run` and `report`.
std::string metrics_json(const metrics::CalibrationReport& pre,
                         const metrics::CalibrationReport& post, std::size_t bins);
std::string predictions_jsonl(const std::vector<QuestionTranscript>& transcripts, bool post);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace collabcal
