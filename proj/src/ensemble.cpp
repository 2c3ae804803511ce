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

#include "collabcal/ensemble.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include <spdlog/spdlog.h>

#include "collabcal/errors.hpp"
#include "collabcal/hashing.hpp"
#include "collabcal/parallel.hpp"
#include "collabcal/simulated_provider.hpp"
#include "collabcal/text.hpp"

namespace collabcal {

namespace {

constexpr std::array<std::string_view, 5> kSkillNames = {"cot", "pot", "self_ask", "genread",
                                                         "general"};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Smaller root wins so labels do not depend on union order.
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

std::string_view skill_template(Skill skill) {
  switch (skill) {
    case Skill::kCot:
      return templates::kCot;
    case Skill::kPot:
      return templates::kPot;
    case Skill::kSelfAsk:
      return templates::kSelfAsk;
    case Skill::kGenRead:
      return templates::kGenRead;
    case Skill::kGeneral:
      break;
  }
  throw ConfigError("general agents have no expert prompting strategy");
}

double sorted_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

}  // namespace

std::string_view to_string(Skill skill) { return kSkillNames[static_cast<std::size_t>(skill)]; }

std::optional<Skill> parse_skill(std::string_view name) {
  auto lower = text::to_lower(text::trim(name));
  for (std::size_t i = 0; i < kSkillNames.size(); ++i) {
    if (kSkillNames[i] == lower) return static_cast<Skill>(i);
  }
  if (lower == "knowledge") return Skill::kGenRead;
  return std::nullopt;
}

bool AgentProfile::valid() const {
  return role == AgentRole::kExpert ? skill != Skill::kGeneral : skill == Skill::kGeneral;
}

CompletionRequest tagged_request(const AgentProfile& agent, const Question& question,
                                 std::string_view call_kind, std::string prompt, double temperature,
                                 int max_tokens, std::string_view target) {
  RequestContext ctx{{std::string(context_keys::kQuestionId), question.id},
                     {std::string(context_keys::kAgentId), agent.agent_id},
                     {std::string(context_keys::kCallKind), std::string(call_kind)},
                     {std::string(context_keys::kSkill), std::string(to_string(agent.skill))}};
  if (!target.empty()) ctx[std::string(context_keys::kTarget)] = std::string(target);
  return make_request(agent.backbone.model_id, std::move(prompt), temperature, max_tokens,
                      std::move(ctx));
}

// --- equivalence ----------------------------------------------------------

EquivalenceJudge EquivalenceJudge::exact_match() { return EquivalenceJudge{}; }

EquivalenceJudge EquivalenceJudge::llm(Backbone judge, const PromptRegistry* prompts,
                                       CallSettings calls) {
  if (!judge.provider) throw ConfigError("llm judge requires a provider");
  if (prompts == nullptr) throw ConfigError("llm judge requires a prompt registry");
  EquivalenceJudge j;
  j.mode_ = Mode::kLlm;
  j.backbone_ = std::move(judge);
  j.prompts_ = prompts;
  j.calls_ = calls;
  return j;
}

bool EquivalenceJudge::equivalent(const Question& question, std::string_view a,
                                  std::string_view b) const {
  if (text::normalize_answer(a) == text::normalize_answer(b)) return true;
  if (mode_ == Mode::kNormalizedExactMatch) return false;

  // Canonical argument order keeps the relation symmetric.
  if (b < a) std::swap(a, b);
  AgentProfile judge{"judge", *backbone_, Skill::kGeneral, AgentRole::kDeliberator};
  auto prompt = prompts_->render(templates::kJudgeEquivalence,
                                 {{"QUERY", question.text},
                                  {"ANSWER-A", std::string(a)},
                                  {"ANSWER-B", std::string(b)}});
  auto req = tagged_request(judge, question, to_string(CallKind::kJudge), prompt,
                            calls_.judge_temperature, calls_.max_tokens,
                            std::string(a) + "\x1f" + std::string(b));
  req.context[std::string(sim_hints::kAnswerA)] = std::string(a);
  req.context[std::string(sim_hints::kAnswerB)] = std::string(b);

  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      auto verdict = parse_yes_no(complete(req, *backbone_->provider).text);
      if (verdict) return *verdict;
    } catch (const Error& e) {
      spdlog::warn("judge call failed for '{}' vs '{}': {}", a, b, e.what());
      break;
    }
  }
  spdlog::warn("{}", JudgeError("unparseable judge verdict for '" + std::string(a) + "' vs '" +
                                std::string(b) + "'; using normalized match")
                         .what());
  return false;
}

bool EquivalenceJudge::matches_reference(const Question& question, std::string_view answer) const {
  return std::any_of(question.references.begin(), question.references.end(),
                     [&](const std::string& ref) { return equivalent(question, answer, ref); });
}

// --- stage 1 -------------------------------------------------------------

Stage1Record run_expert(const Question& question, const AgentProfile& agent,
                        const AgentContext& ctx) {
  Stage1Record rec;
  rec.agent_id = agent.agent_id;
  rec.backbone = agent.backbone.name;
  rec.skill = agent.skill;
  try {
    const auto& prompts = *ctx.prompts;
    const auto& provider = *agent.backbone.provider;
    const VariableMap query_vars{{"QUERY", question.text}};
    const std::string stance_instructions = prompts.render(templates::kStanceGeneration, {});
    const double temp = ctx.calls.stance_temperature;
    const int max_tokens = ctx.calls.max_tokens;
    const auto stance_kind = to_string(CallKind::kStance);

    CompletionRequest req;
    if (agent.skill == Skill::kCot || agent.skill == Skill::kPot) {
      req = tagged_request(agent, question, stance_kind,
                           prompts.render(skill_template(agent.skill), query_vars) + "\n\n" +
                               stance_instructions,
                           temp, max_tokens);
    } else {
      // Two-call scaffolds: a preparatory call, then the answer call with the
      // first exchange kept in the conversation.
      const std::string first_prompt = prompts.render(skill_template(agent.skill), query_vars);
      auto first = tagged_request(agent, question, to_string(CallKind::kScaffold), first_prompt,
                                  temp, max_tokens);
      first.context[std::string(sim_hints::kQuery)] = question.text;
      const auto first_reply = complete(first, provider).text;

      std::string second_prompt;
      if (agent.skill == Skill::kSelfAsk) {
        auto follow_up = parse_follow_up(first_reply).value_or(question.text);
        std::vector<SearchResult> results;
        if (ctx.search != nullptr) {
          try {
            results = ctx.search->search(question.id, follow_up);
          } catch (const Error& e) {
            spdlog::warn("self-ask search failed for {}: {}", question.id, e.what());
          }
        }
        second_prompt = "Intermediate answer:\n" +
                        (results.empty() ? std::string("(no search results)\n")
                                         : format_search_results(results)) +
                        "\n" + stance_instructions;
      } else {
        second_prompt =
            "Refer to the background document above to answer the question.\n\n" +
            stance_instructions;
      }
      req = first;
      req.context[std::string(context_keys::kCallKind)] = std::string(stance_kind);
      req.messages.push_back({Role::kAssistant, first_reply});
      req.messages.push_back({Role::kUser, std::move(second_prompt)});
    }

    req.want_token_probs = provider.supports_token_probs();
    auto resp = complete(req, provider);
    rec.raw_text = resp.text;
    rec.stance = parse_stance(resp.text);
    if (!rec.stance.abstained) {
      if (resp.token_probs) {
        rec.confidence = perplexity_confidence(*resp.token_probs);
      } else if (rec.stance.confidence) {
        rec.confidence = verbalized_confidence(*rec.stance.confidence);
      }
    }
  } catch (const std::exception& e) {
    spdlog::warn("expert {} failed on {}: {}", agent.agent_id, question.id, e.what());
    rec.error = e.what();
    rec.stance = ParsedStance{};
    rec.confidence.reset();
  }
  return rec;
}

std::vector<Stage1Record> collect_stage1(const Question& question,
                                         std::span<const AgentProfile> agents,
                                         const AgentContext& ctx) {
  if (agents.empty()) throw ConfigError("stage 1 needs at least one expert agent");
  for (const auto& a : agents) {
    if (a.role != AgentRole::kExpert || !a.valid()) {
      throw ConfigError("agent " + a.agent_id + " is not a valid expert");
    }
  }
  std::vector<Stage1Record> records(agents.size());
  parallel_for(
      agents.size(), [&](std::size_t i) { records[i] = run_expert(question, agents[i], ctx); },
      ctx.calls.fanout);
  if (std::all_of(records.begin(), records.end(), [](const auto& r) { return r.abstained(); })) {
    throw AllAbstained("every expert abstained on " + question.id);
  }
  return records;
}

std::vector<std::size_t> partition_answers(const Question& question,
                                           std::span<const std::string> answers,
                                           const EquivalenceJudge& judge) {
  std::vector<std::string> unique(answers.begin(), answers.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

  UnionFind uf(unique.size());
  for (std::size_t i = 0; i < unique.size(); ++i) {
    for (std::size_t j = i + 1; j < unique.size(); ++j) {
      if (uf.find(i) == uf.find(j)) continue;
      if (judge.equivalent(question, unique[i], unique[j])) uf.unite(i, j);
    }
  }

  std::map<std::size_t, std::size_t> dense;
  std::vector<std::size_t> unique_label(unique.size());
  for (std::size_t i = 0; i < unique.size(); ++i) {
    auto root = uf.find(i);
    auto [it, _] = dense.emplace(root, dense.size());
    unique_label[i] = it->second;
  }
  std::vector<std::size_t> labels;
  labels.reserve(answers.size());
  for (const auto& a : answers) {
    auto pos = std::lower_bound(unique.begin(), unique.end(), a) - unique.begin();
    labels.push_back(unique_label[static_cast<std::size_t>(pos)]);
  }
  return labels;
}

StanceSet cluster_stances(const Question& question, std::span<const Stage1Record> records,
                          const EquivalenceJudge& judge) {
  std::vector<const Stage1Record*> voting;
  for (const auto& r : records) {
    if (!r.abstained()) voting.push_back(&r);
  }
  if (voting.empty()) throw AllAbstained("no answers to cluster for " + question.id);

  std::vector<std::string> answers;
  for (const auto* r : voting) answers.push_back(r->stance.answer);
  const auto labels = partition_answers(question, answers, judge);
  const std::size_t classes = *std::max_element(labels.begin(), labels.end()) + 1;

  std::vector<std::vector<const Stage1Record*>> members(classes);
  for (std::size_t i = 0; i < voting.size(); ++i) members[labels[i]].push_back(voting[i]);

  StanceSet out;
  out.abstentions = static_cast<int>(records.size() - voting.size());
  for (auto& group : members) {
    Stance s;
    std::vector<double> confs;
    const Stage1Record* best = nullptr;
    for (const auto* r : group) {
      confs.push_back(r->confidence->value);
      s.member_answers.push_back(r->stance.answer);
      s.supporters.push_back(r->agent_id);
      if (best == nullptr || r->confidence->value > best->confidence->value ||
          (r->confidence->value == best->confidence->value && r->stance.answer < best->stance.answer)) {
        best = r;
      }
    }
    std::sort(s.member_answers.begin(), s.member_answers.end());
    s.member_answers.erase(std::unique(s.member_answers.begin(), s.member_answers.end()),
                           s.member_answers.end());
    std::sort(s.supporters.begin(), s.supporters.end());
    s.frequency = static_cast<int>(group.size());
    s.mean_confidence = sorted_mean(std::move(confs));
    s.representative_answer = best->stance.answer;
    out.stances.push_back(std::move(s));
  }
  std::sort(out.stances.begin(), out.stances.end(), [](const Stance& a, const Stance& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    if (a.mean_confidence != b.mean_confidence) return a.mean_confidence > b.mean_confidence;
    return a.representative_answer < b.representative_answer;
  });
  for (std::size_t i = 0; i < out.stances.size(); ++i) out.stances[i].stance_id = static_cast<int>(i);
  return out;
}

// --- agent selection ------------------------------------------------------

std::vector<std::size_t> backbone_shares(std::size_t total_slots, std::size_t backbone_count) {
  std::vector<std::size_t> shares(backbone_count, 0);
  for (std::size_t b = 0; b < backbone_count; ++b) {
    shares[b] = total_slots / backbone_count + (b < total_slots % backbone_count ? 1 : 0);
  }
  return shares;
}

std::vector<BackboneSelection> select_agents(std::span<const Question> validation,
                                             std::span<const Skill> candidates,
                                             std::span<const Backbone> backbones, std::size_t m,
                                             double tau, std::size_t total_slots,
                                             const EquivalenceJudge& judge,
                                             const AgentContext& ctx) {
  if (total_slots == 0) throw ConfigError("ensemble size must be at least 1");
  if (m == 0 || m > validation.size()) {
    throw ConfigError("validation sample size m=" + std::to_string(m) + " needs 1.." +
                      std::to_string(validation.size()) + " validation questions");
  }
  if (candidates.empty() || backbones.empty()) throw ConfigError("selection needs skills and backbones");

  std::vector<std::size_t> order(validation.size());
  std::iota(order.begin(), order.end(), 0);
  HashStream rng(hash_parts(ctx.seed, {"validation-sample"}));
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(m);
  std::sort(order.begin(), order.end());

  const auto shares = backbone_shares(total_slots, backbones.size());
  std::vector<BackboneSelection> out;
  for (std::size_t b = 0; b < backbones.size(); ++b) {
    if (shares[b] == 0) continue;
    const auto& backbone = backbones[b];
    std::vector<std::vector<ValidationCell>> cells(candidates.size(), std::vector<ValidationCell>(m));

    parallel_for(
        candidates.size() * m,
        [&](std::size_t k) {
          const std::size_t i = k / m;
          const std::size_t j = k % m;
          const auto& q = validation[order[j]];
          AgentProfile agent{backbone.name + "/" + std::string(to_string(candidates[i])) + "/validation",
                             backbone, candidates[i], AgentRole::kExpert};
          auto rec = run_expert(q, agent, ctx);
          auto& cell = cells[i][j];
          cell.agent_index = i;
          cell.example_index = j;
          if (!rec.abstained()) {
            cell.answer = rec.stance.answer;
            cell.confidence = *rec.confidence;
            cell.is_correct = judge.matches_reference(q, rec.stance.answer);
          }
        },
        ctx.calls.fanout);

    TypeScores scores;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      scores.emplace_back(std::string(to_string(candidates[i])), mean_calibration_score(cells[i]));
    }
    out.push_back({backbone.name, select_from_scores(scores, tau, shares[b], m)});
  }
  return out;
}

std::vector<AgentProfile> build_expert_agents(std::span<const BackboneSelection> selection,
                                              std::span<const Backbone> backbones) {
  std::vector<AgentProfile> agents;
  for (const auto& sel : selection) {
    auto bb = std::find_if(backbones.begin(), backbones.end(),
                           [&](const Backbone& b) { return b.name == sel.backbone; });
    if (bb == backbones.end()) throw ConfigError("unknown backbone " + sel.backbone);
    for (const auto& [skill_name, slots] : sel.result.slots) {
      auto skill = parse_skill(skill_name);
      if (!skill) throw ConfigError("unknown skill " + skill_name);
      for (std::size_t k = 1; k <= slots; ++k) {
        agents.push_back({sel.backbone + "/" + skill_name + "/" + std::to_string(k), *bb, *skill,
                          AgentRole::kExpert});
      }
    }
  }
  return agents;
}

}  // namespace collabcal
