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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "collabcal/backend.hpp"
#include "collabcal/confidence.hpp"
#include "collabcal/prompts.hpp"
#include "collabcal/search.hpp"

namespace collabcal {

enum class Skill { kCot, kPot, kSelfAsk, kGenRead, kGeneral };

std::string_view to_string(Skill skill);
std::optional<Skill> parse_skill(std::string_view name);

enum class AgentRole { kExpert, kDeliberator };

// A provider bound to a model id under a stable name.
struct Backbone {
  std::string name;
  std::string model_id;
  ProviderHandle provider;
};

struct AgentProfile {
  std::string agent_id;
  Backbone backbone;
  Skill skill = Skill::kGeneral;
  AgentRole role = AgentRole::kExpert;

  // Experts need a real skill, deliberators must be general.
  bool valid() const;
};

struct Question {
  std::string id;
  std::string text;
  std::vector<std::string> references;
};

struct CallSettings {
  double stance_temperature = 0.7;
  double judge_temperature = 0.0;
  double deliberation_temperature = 0.7;
  int max_tokens = 512;
  // Threads for per-question fan-out; <= 0 uses the OpenMP default.
  int fanout = 0;
};

// Everything an agent call needs besides the agent itself.
struct AgentContext {
  const PromptRegistry* prompts = nullptr;
  const SearchProvider* search = nullptr;
  CallSettings calls;
  std::uint64_t seed = 0;
};

// Builds a request tagged for routing (question, agent, call kind, target).
CompletionRequest tagged_request(const AgentProfile& agent, const Question& question,
                                 std::string_view call_kind, std::string prompt, double temperature,
                                 int max_tokens, std::string_view target = {});

class EquivalenceJudge {
 public:
  enum class Mode { kLlm, kNormalizedExactMatch };

  static EquivalenceJudge exact_match();
  // The judge asks for a single yes/no at the judge temperature.
  static EquivalenceJudge llm(Backbone judge, const PromptRegistry* prompts, CallSettings calls);

  Mode mode() const { return mode_; }

  // Normalized-identical strings short-circuit to true. In llm mode an
  // unparseable verdict is retried once, then falls back to normalized match.
  bool equivalent(const Question& question, std::string_view a, std::string_view b) const;
  bool matches_reference(const Question& question, std::string_view answer) const;

 private:
  Mode mode_ = Mode::kNormalizedExactMatch;
  std::optional<Backbone> backbone_;
  const PromptRegistry* prompts_ = nullptr;
  CallSettings calls_;
};

struct Stage1Record {
  std::string agent_id;
  std::string backbone;
  Skill skill = Skill::kCot;
  ParsedStance stance;
  std::optional<RawConfidence> confidence;
  std::string raw_text;
  // Set when the agent's calls failed and it was recorded as abstaining.
  std::optional<std::string> error;

  bool abstained() const { return stance.abstained || !confidence.has_value(); }
};

// Runs one expert's prompting strategy. Never throws: failures become an
// abstention with `error` set.
Stage1Record run_expert(const Question& question, const AgentProfile& agent, const AgentContext& ctx);

// Fans the experts out concurrently. Throws AllAbstained if nobody answered.
std::vector<Stage1Record> collect_stage1(const Question& question,
                                         std::span<const AgentProfile> agents,
                                         const AgentContext& ctx);

struct Stance {
  int stance_id = 0;
  std::string representative_answer;
  std::vector<std::string> member_answers;
  int frequency = 0;
  double mean_confidence = 0.0;
  std::vector<std::string> supporters;
};

struct StanceSet {
  std::vector<Stance> stances;
  int abstentions = 0;
};

// Groups answer strings into equivalence classes. Returns a class label per
// input string; labels are dense and ordered by first appearance in the
// sorted unique strings. Transitive by union-find.
std::vector<std::size_t> partition_answers(const Question& question,
                                           std::span<const std::string> answers,
                                           const EquivalenceJudge& judge);

// Throws AllAbstained when no record carries an answer.
StanceSet cluster_stances(const Question& question, std::span<const Stage1Record> records,
                          const EquivalenceJudge& judge);

struct BackboneSelection {
  std::string backbone;
  SelectionResult result;
};

// Task-level selection: samples m validation questions, lets one candidate
// agent per (skill, backbone) answer them, scores each skill and allocates
// the backbone's share of the N slots.
std::vector<BackboneSelection> select_agents(std::span<const Question> validation,
                                             std::span<const Skill> candidates,
                                             std::span<const Backbone> backbones, std::size_t m,
                                             double tau, std::size_t total_slots,
                                             const EquivalenceJudge& judge,
                                             const AgentContext& ctx);

// Equal split of N across backbones; earlier backbones take the remainder.
std::vector<std::size_t> backbone_shares(std::size_t total_slots, std::size_t backbone_count);

// Expert profiles "<backbone>/<skill>/<k>" realizing a selection.
std::vector<AgentProfile> build_expert_agents(std::span<const BackboneSelection> selection,
                                              std::span<const Backbone> backbones);

}  // namespace collabcal
