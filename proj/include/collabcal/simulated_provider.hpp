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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "collabcal/backend.hpp"

namespace collabcal {

// Behavioural knobs of one simulated agent.
struct SimAgentParams {
  double accuracy = 0.6;
  // Shift applied to the reported confidence.
  double confidence_bias = 0.0;
  // Half-width of the uniform noise added to the reported confidence.
  double confidence_noise = 0.0;
  // Probability of switching to a better-rated opposing stance.
  double persuadability = 0.0;
  std::string seed_namespace;

  // Throws ConfigError if a field is out of range.
  void validate() const;
};

// World-level knobs shared by every simulated agent.
struct SimPolicy {
  // Wrong answers are drawn from this many decoys per question...
  std::size_t distractor_count = 3;
  // ...choosing the first decoy with this probability, otherwise uniformly.
  double distractor_concentration = 0.7;
  // Probability that an unsupported premise is reported as contradicted.
  double verifier_recall = 0.8;
  // Probability that a supported premise is reported as contradicted anyway.
  double verifier_false_alarm = 0.1;
  // Posterior = prior_weight * C_prior + (1 - prior_weight) * evidence, where
  // evidence starts from the stated agreement as prior odds and applies the
  // verifier's likelihood ratios for the factuality flags in the rationale.
  double prior_weight = 0.3;
  // Agreement is clamped to [agreement_floor, 1 - agreement_floor].
  double agreement_floor = 0.02;
  double posterior_noise = 0.05;

  void validate() const;
};

enum class CallKind {
  kStance,
  kScaffold,
  kArgument,
  kRating,
  kPremises,
  kPremiseCheck,
  kRevise,
  kPosterior,
  kJudge,
};

std::string_view to_string(CallKind kind);
std::optional<CallKind> parse_call_kind(std::string_view name);

// Context keys the simulator reads besides the routing ids. They mirror
// information the corresponding prompt already shows the model.
namespace sim_hints {
inline constexpr std::string_view kQuery = "query";
inline constexpr std::string_view kStance = "stance";
inline constexpr std::string_view kEvidence = "evidence";
inline constexpr std::string_view kOpposingAnswer = "opposing_answer";
inline constexpr std::string_view kSupportQuality = "support_quality";
inline constexpr std::string_view kOpposeQuality = "oppose_quality";
inline constexpr std::string_view kSupportFlagged = "support_flagged";
inline constexpr std::string_view kOpposeFlagged = "oppose_flagged";
inline constexpr std::string_view kNumberSupporting = "number_supporting";
inline constexpr std::string_view kNumberAgainst = "number_against";
inline constexpr std::string_view kOriginalConfidence = "original_confidence";
inline constexpr std::string_view kRationale = "rationale";
inline constexpr std::string_view kAnswerA = "answer_a";
inline constexpr std::string_view kAnswerB = "answer_b";
}  // namespace sim_hints

struct SimGold {
  std::vector<std::string> answers;
  std::vector<std::string> distractors;
};

struct SimCall {
  std::string question_id;
  std::string agent_id;
  CallKind kind = CallKind::kStance;
  std::string target;
  const RequestContext* hints = nullptr;
};

// Deterministic agent behaviour. The reply is a pure function of
// (global_seed, params.seed_namespace, question_id, agent_id, kind, target)
// and the hints; it follows the same reply grammar the prompts ask for.
CompletionResponse sim_decide(std::uint64_t global_seed, const SimCall& call,
                              const SimAgentParams& params, const SimGold& gold,
                              const SimPolicy& policy);

// Gold answers and decoys for every question the simulator may be asked about.
class SimWorld {
 public:
  SimWorld() = default;
  // Decoys are synthesized when `distractors` is empty.
  void add(std::string question_id, std::vector<std::string> answers,
           std::vector<std::string> distractors, std::size_t distractor_count);
  const SimGold* find(std::string_view question_id) const;

 private:
  std::map<std::string, SimGold, std::less<>> gold_;
};

enum class TokenProbMode { kNone, kFixed, kFromConfidence };

struct SimulatedProviderOptions {
  std::uint64_t seed = 0;
  std::string backbone = "sim";
  SimPolicy policy;
  SimAgentParams defaults;
  // Per-skill overrides keyed by the request's skill tag.
  std::map<std::string, SimAgentParams> by_skill;
  TokenProbMode token_probs = TokenProbMode::kNone;
  std::vector<double> fixed_token_probs;
};

class SimulatedProvider final : public Provider {
 public:
  SimulatedProvider(SimulatedProviderOptions options, std::shared_ptr<const SimWorld> world);

  CompletionResponse complete(const CompletionRequest& request) const override;
  bool supports_token_probs() const override {
    return options_.token_probs != TokenProbMode::kNone;
  }
  std::string name() const override { return "sim:" + options_.backbone; }

  const SimAgentParams& params_for(std::string_view skill) const;

 private:
  SimulatedProviderOptions options_;
  std::shared_ptr<const SimWorld> world_;
};

}  // namespace collabcal
