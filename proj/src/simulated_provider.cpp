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

#include "collabcal/simulated_provider.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <regex>

#include "collabcal/errors.hpp"
#include "collabcal/hashing.hpp"
#include "collabcal/text.hpp"

namespace collabcal {

namespace {

void require_unit(double v, const char* field) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ConfigError(std::string(field) + " must lie in [0, 1]");
  }
}

constexpr std::array<std::string_view, 9> kCallKindNames = {
    "stance", "scaffold", "argument", "rating", "premises",
    "premise_check", "revise", "posterior", "judge"};

// Categorical rating distributions (bad, modest, good, excellent). Arguments
// for a gold stance read a little better on average.
constexpr std::array<double, 4> kRatingCorrect = {0.05, 0.25, 0.45, 0.25};
constexpr std::array<double, 4> kRatingIncorrect = {0.15, 0.35, 0.35, 0.15};
constexpr std::array<std::string_view, 4> kRatingNames = {"bad", "modest", "good", "excellent"};

std::string hint(const SimCall& call, std::string_view key) {
  if (call.hints == nullptr) return {};
  auto it = call.hints->find(std::string(key));
  return it == call.hints->end() ? std::string{} : it->second;
}

double hint_number(const SimCall& call, std::string_view key, double fallback) {
  auto value = hint(call, key);
  if (value.empty()) return fallback;
  try {
    return std::stod(value);
  } catch (const std::exception&) {
    return fallback;
  }
}

bool is_gold(const SimGold& gold, std::string_view answer) {
  auto norm = text::normalize_answer(answer);
  return std::any_of(gold.answers.begin(), gold.answers.end(),
                     [&](const std::string& g) { return text::normalize_answer(g) == norm; });
}

class Draws {
 public:
  Draws(std::uint64_t seed, const SimAgentParams& params, const SimCall& call)
      : seed_(seed), params_(params), call_(call) {}
  double operator()(std::string_view label) const {
    return unit_interval(hash_parts(seed_, {params_.seed_namespace, call_.question_id,
                                            call_.agent_id, to_string(call_.kind),
                                            call_.target, label}));
  }

 private:
  std::uint64_t seed_;
  const SimAgentParams& params_;
  const SimCall& call_;
};

std::string pick_rating(double u, const std::array<double, 4>& dist) {
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    if (u < acc) return std::string(kRatingNames[i]);
  }
  return std::string(kRatingNames.back());
}

CompletionResponse reply(std::string text) {
  CompletionResponse r;
  r.text = std::move(text);
  return r;
}

}  // namespace

void SimAgentParams::validate() const {
  require_unit(accuracy, "accuracy");
  require_unit(persuadability, "persuadability");
  if (!(confidence_bias >= -1.0 && confidence_bias <= 1.0)) {
    throw ConfigError("confidence_bias must lie in [-1, 1]");
  }
  if (!(confidence_noise >= 0.0) || !std::isfinite(confidence_noise)) {
    throw ConfigError("confidence_noise must be finite and non-negative");
  }
}

void SimPolicy::validate() const {
  require_unit(distractor_concentration, "distractor_concentration");
  require_unit(verifier_recall, "verifier_recall");
  require_unit(verifier_false_alarm, "verifier_false_alarm");
  require_unit(prior_weight, "prior_weight");
  if (!(agreement_floor > 0.0 && agreement_floor < 0.5)) {
    throw ConfigError("agreement_floor must lie in (0, 0.5)");
  }
  if (verifier_false_alarm >= verifier_recall) {
    throw ConfigError("verifier_recall must exceed verifier_false_alarm");
  }
  if (!(posterior_noise >= 0.0)) throw ConfigError("posterior_noise must be non-negative");
  if (distractor_count == 0) throw ConfigError("distractor_count must be positive");
}

std::string_view to_string(CallKind kind) { return kCallKindNames[static_cast<std::size_t>(kind)]; }

std::optional<CallKind> parse_call_kind(std::string_view name) {
  for (std::size_t i = 0; i < kCallKindNames.size(); ++i) {
    if (kCallKindNames[i] == name) return static_cast<CallKind>(i);
  }
  return std::nullopt;
}

CompletionResponse sim_decide(std::uint64_t global_seed, const SimCall& call,
                              const SimAgentParams& params, const SimGold& gold,
                              const SimPolicy& policy) {
  const Draws draw(global_seed, params, call);

  switch (call.kind) {
    case CallKind::kStance: {
      std::string aux = "Ambiguity: " + text::format_decimal(draw("ambiguity"), 2) +
                        "\nComplexity: " + text::format_decimal(draw("complexity"), 2) +
                        "\nAbility: " + text::format_decimal(draw("ability"), 2) + "\n";
      if (gold.answers.empty()) return reply(aux + "Answer: Abstain Confidence: 0");
      std::string answer;
      if (draw("correct") < params.accuracy) {
        answer = gold.answers.front();
      } else if (gold.distractors.empty()) {
        answer = "not " + gold.answers.front();
      } else if (gold.distractors.size() == 1 ||
                 draw("distractor") < policy.distractor_concentration) {
        answer = gold.distractors.front();
      } else {
        auto k = 1 + static_cast<std::size_t>(draw("which") *
                                              static_cast<double>(gold.distractors.size() - 1));
        answer = gold.distractors[std::min(k, gold.distractors.size() - 1)];
      }
      // Reported confidence tracks the agent's accuracy, not the draw itself.
      double conf = params.accuracy + params.confidence_bias +
                    params.confidence_noise * (2.0 * draw("noise") - 1.0);
      conf = std::clamp(conf, 0.0, 1.0);
      return reply(aux + "Answer: " + answer + " Confidence: " + text::format_decimal(conf));
    }

    case CallKind::kScaffold: {
      auto query = hint(call, sim_hints::kQuery);
      return reply("Are follow up questions needed here: Yes.\nFollow up: " +
                   (query.empty() ? std::string("What is the answer?") : query));
    }

    case CallKind::kArgument: {
      auto stance = hint(call, sim_hints::kStance);
      return reply("Argument: The answer to the question is " + stance +
                   ". The relevant facts and the reasoning steps both lead to " + stance + ".");
    }

    case CallKind::kRating: {
      const auto& dist =
          is_gold(gold, hint(call, sim_hints::kStance)) ? kRatingCorrect : kRatingIncorrect;
      return reply("Consistency: " + pick_rating(draw("consistency"), dist) +
                   ", Clarity: " + pick_rating(draw("clarity"), dist) +
                   ", Conciseness: " + pick_rating(draw("conciseness"), dist));
    }

    case CallKind::kPremises: {
      auto stance = hint(call, sim_hints::kStance);
      if (stance.empty()) return reply("Premises: none");
      return reply("Premise: The answer to the question is " + stance + " | unsure");
    }

    case CallKind::kPremiseCheck: {
      auto evidence = hint(call, sim_hints::kEvidence);
      if (evidence.empty()) return reply("Verdict: unknown");
      bool supported = text::contains_normalized(evidence, hint(call, sim_hints::kStance));
      double u = draw("verify");
      bool contradicted = supported ? u < policy.verifier_false_alarm : u < policy.verifier_recall;
      return reply(std::string("Verdict: ") +
                   (contradicted ? "contradicted" : (supported ? "supported" : "unknown")));
    }

    case CallKind::kRevise: {
      auto stance = hint(call, sim_hints::kStance);
      auto opposing = hint(call, sim_hints::kOpposingAnswer);
      double support_q = hint_number(call, sim_hints::kSupportQuality, 0.0);
      double oppose_q = hint_number(call, sim_hints::kOpposeQuality, 0.0);
      double n_support = hint_number(call, sim_hints::kNumberSupporting, 0.0);
      double n_against = hint_number(call, sim_hints::kNumberAgainst, 0.0);
      bool switched = !opposing.empty() && oppose_q > support_q &&
                      draw("persuade") < params.persuadability;
      const bool support_flagged = hint(call, sim_hints::kSupportFlagged) == "1";
      const bool oppose_flagged = hint(call, sim_hints::kOpposeFlagged) == "1";
      const bool for_flagged = switched ? oppose_flagged : support_flagged;
      const bool against_flagged = switched ? support_flagged : oppose_flagged;
      double total = n_support + n_against + 1.0;
      double agreement = switched ? n_against / total : (n_support + 1.0) / total;
      std::string rationale =
          "Agreement with my final answer: " + text::format_decimal(100.0 * agreement, 0) +
          "%. Factual issues in the argument for my final answer: " +
          (for_flagged ? "flagged" : "none") +
          ". Factual issues in the argument against it: " +
          (opposing.empty() ? "n/a" : (against_flagged ? "flagged" : "none")) + ". " +
          (switched ? "The opposing argument was rated higher, so I changed my answer."
                    : "I keep my original answer after weighing both sides.");
      return reply("Answer: " + (switched ? opposing : stance) + " Rationales: " + rationale);
    }

    case CallKind::kPosterior: {
      double prior = hint_number(call, sim_hints::kOriginalConfidence, 0.5);
      auto rationale = hint(call, sim_hints::kRationale);
      static const std::regex agreement_re(R"(Agreement with my final answer: (\d+(?:\.\d+)?)%)");
      static const std::regex for_re(R"(argument for my final answer: (none|flagged))");
      static const std::regex against_re(R"(argument against it: (none|flagged|n/a))");
      double evidence = 0.5;
      std::smatch m1, m2, m3;
      if (std::regex_search(rationale, m1, agreement_re) &&
          std::regex_search(rationale, m2, for_re)) {
        double agreement = std::clamp(std::stod(m1[1].str()) / 100.0, policy.agreement_floor,
                                      1.0 - policy.agreement_floor);
        // Verifier likelihood ratios for "my answer is right".
        const double lr_clean = (1.0 - policy.verifier_false_alarm) / (1.0 - policy.verifier_recall);
        const double lr_flag = policy.verifier_false_alarm / policy.verifier_recall;
        double odds = agreement / (1.0 - agreement);
        odds *= m2[1].str() == "flagged" ? lr_flag : lr_clean;
        if (std::regex_search(rationale, m3, against_re) && m3[1].str() != "n/a") {
          odds /= m3[1].str() == "flagged" ? lr_flag : lr_clean;
        }
        evidence = odds / (1.0 + odds);
      }
      double post = policy.prior_weight * prior + (1.0 - policy.prior_weight) * evidence +
                    policy.posterior_noise * (2.0 * draw("noise") - 1.0);
      return reply("Confidence: " + text::format_decimal(std::clamp(post, 0.0, 1.0)));
    }

    case CallKind::kJudge: {
      auto a = hint(call, sim_hints::kAnswerA);
      auto b = hint(call, sim_hints::kAnswerB);
      bool same = text::normalize_answer(a) == text::normalize_answer(b) ||
                  (is_gold(gold, a) && is_gold(gold, b));
      return reply(same ? "yes" : "no");
    }
  }
  return reply("");
}

void SimWorld::add(std::string question_id, std::vector<std::string> answers,
                   std::vector<std::string> distractors, std::size_t distractor_count) {
  if (distractors.empty() && !answers.empty()) {
    for (std::size_t k = 1; k <= distractor_count; ++k) {
      distractors.push_back(answers.front() + "-decoy-" + std::to_string(k));
    }
  }
  gold_[std::move(question_id)] = SimGold{std::move(answers), std::move(distractors)};
}

const SimGold* SimWorld::find(std::string_view question_id) const {
  auto it = gold_.find(question_id);
  return it == gold_.end() ? nullptr : &it->second;
}

SimulatedProvider::SimulatedProvider(SimulatedProviderOptions options,
                                     std::shared_ptr<const SimWorld> world)
    : options_(std::move(options)), world_(std::move(world)) {
  options_.policy.validate();
  options_.defaults.validate();
  if (options_.defaults.seed_namespace.empty()) options_.defaults.seed_namespace = options_.backbone;
  for (auto& [skill, params] : options_.by_skill) {
    params.validate();
    if (params.seed_namespace.empty()) params.seed_namespace = options_.backbone;
  }
  if (!world_) world_ = std::make_shared<SimWorld>();
}

const SimAgentParams& SimulatedProvider::params_for(std::string_view skill) const {
  auto it = options_.by_skill.find(std::string(skill));
  return it == options_.by_skill.end() ? options_.defaults : it->second;
}

CompletionResponse SimulatedProvider::complete(const CompletionRequest& request) const {
  auto get = [&](std::string_view key) {
    auto it = request.context.find(std::string(key));
    return it == request.context.end() ? std::string{} : it->second;
  };
  SimCall call;
  call.question_id = get(context_keys::kQuestionId);
  call.agent_id = get(context_keys::kAgentId);
  call.target = get(context_keys::kTarget);
  call.hints = &request.context;
  auto kind = parse_call_kind(get(context_keys::kCallKind));
  if (!kind) throw InvalidRequest("simulated provider needs a call_kind tag");
  call.kind = *kind;

  static const SimGold kNoGold;
  const SimGold* gold = world_->find(call.question_id);
  CompletionResponse out = sim_decide(options_.seed, call, params_for(get(context_keys::kSkill)),
                                      gold ? *gold : kNoGold, options_.policy);
  out.provider_meta["provider"] = name();

  if (request.want_token_probs) {
    switch (options_.token_probs) {
      case TokenProbMode::kNone:
        break;
      case TokenProbMode::kFixed:
        out.token_probs = options_.fixed_token_probs;
        break;
      case TokenProbMode::kFromConfidence: {
        // Two answer tokens whose geometric mean is the verbalized confidence.
        double p = 1.0;
        static const std::regex conf_re(R"(Confidence: ([0-9.]+))");
        std::smatch m;
        if (std::regex_search(out.text, m, conf_re)) p = std::stod(m[1].str());
        p = std::clamp(p, 1e-6, 1.0);
        out.token_probs = std::vector<double>{p, p};
        break;
      }
    }
  }
  return out;
}

}  // namespace collabcal
