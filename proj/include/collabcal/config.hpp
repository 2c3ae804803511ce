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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "collabcal/ensemble.hpp"
#include "collabcal/simulated_provider.hpp"

namespace collabcal {

enum class BackendMode { kSimulated, kHttp };
enum class JudgeMode { kAuto, kLlm, kExactMatch };
enum class SearchMode { kNone, kReferenceStub, kFile, kHttp };

struct BackboneConfig {
  std::string name;
  // http backend
  std::string endpoint;
  std::string model;
  std::string api_key_env;
  bool logprobs = false;
  double requests_per_minute = 0.0;
  int max_attempts = 3;
  int initial_backoff_ms = 1000;
  int timeout_s = 120;
  // simulated backend
  TokenProbMode token_probs = TokenProbMode::kNone;
};

struct SimConfig {
  SimPolicy policy;
  SimAgentParams defaults;
  // Keyed by skill name ("cot", ..., "general" for deliberators).
  std::map<std::string, SimAgentParams> by_skill;
};

struct RunConfig {
  std::size_t ensemble_size = 6;
  // Defaults to ensemble_size when unset.
  std::optional<std::size_t> deliberators;
  std::size_t feedback_per_argument = 2;
  double tau = 0.2;
  std::size_t validation_m = 16;
  std::size_t bins = 10;
  std::uint64_t seed = 0;
  int parallelism = 1;
  int fanout = 0;

  BackendMode backend = BackendMode::kSimulated;
  std::vector<BackboneConfig> backbones;
  std::vector<Skill> skills{Skill::kCot, Skill::kPot, Skill::kSelfAsk, Skill::kGenRead};
  bool selection = true;
  // Empty means the first backbone.
  std::string deliberator_backbone;
  std::string verifier_backbone;
  std::string judge_backbone;
  JudgeMode judge = JudgeMode::kAuto;

  SearchMode search = SearchMode::kReferenceStub;
  std::string search_file;
  std::string search_endpoint;
  std::size_t search_max_results = 3;

  double stance_temperature = 0.7;
  double judge_temperature = 0.0;
  double deliberation_temperature = 0.7;
  int max_tokens = 512;

  std::string prompts_dir;
  std::string out;

  SimConfig sim;

  std::size_t deliberator_count() const { return deliberators.value_or(ensemble_size); }
  const BackboneConfig& backbone(std::string_view name) const;
  const BackboneConfig& deliberator() const;
  const BackboneConfig& verifier() const;
  const BackboneConfig& judge_model() const;
  bool llm_judge() const;

  // Throws ConfigError on any violated invariant.
  void validate() const;
};

// Flat `key = value` lines; `#` starts a comment. Unknown keys and anything
// that looks like a credential are rejected with ConfigError.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

// Applies one key/value pair to `config`.
void apply_config_value(RunConfig& config, std::string_view key, std::string_view value);

std::string_view to_string(BackendMode mode);
std::string_view to_string(SearchMode mode);

}  // namespace collabcal
