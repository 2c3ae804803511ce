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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>

#include "collabcal/ensemble.hpp"
#include "collabcal/errors.hpp"
#include "collabcal/prompts.hpp"
#include "collabcal/search.hpp"
#include "support.hpp"

using namespace collabcal;
using namespace collabcal::testing;

namespace {

const PromptRegistry& prompts() {
  static const PromptRegistry reg = PromptRegistry::builtin();
  return reg;
}

AgentContext context(const SearchProvider* search = nullptr) {
  AgentContext ctx;
  ctx.prompts = &prompts();
  ctx.search = search;
  ctx.seed = 1;
  return ctx;
}

Stage1Record answered(std::string agent, std::string answer, double conf) {
  Stage1Record r;
  r.agent_id = std::move(agent);
  r.stance.answer = std::move(answer);
  r.stance.abstained = false;
  r.stance.confidence = conf;
  r.confidence = RawConfidence{conf, ConfidenceSource::kVerbalized};
  return r;
}

Stage1Record abstaining(std::string agent) {
  Stage1Record r;
  r.agent_id = std::move(agent);
  return r;
}

// LLM judge backed by an explicit relation over answer strings.
EquivalenceJudge relation_judge(std::function<bool(const std::string&, const std::string&)> rel) {
  auto bb = mock_backbone("judge", [rel](const CompletionRequest& r) {
    return text_reply(rel(tag(r, "answer_a"), tag(r, "answer_b")) ? "yes" : "no");
  });
  return EquivalenceJudge::llm(bb, &prompts(), {});
}

std::vector<AgentProfile> experts(const Backbone& bb, Skill skill, std::size_t n) {
  std::vector<AgentProfile> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"e" + std::to_string(i), bb, skill, AgentRole::kExpert});
  }
  return out;
}

}  // namespace

TEST_CASE("agent profile validity") {
  auto bb = mock_backbone("m", [](const CompletionRequest&) { return text_reply(""); });
  CHECK(AgentProfile{"a", bb, Skill::kCot, AgentRole::kExpert}.valid());
  CHECK_FALSE(AgentProfile{"a", bb, Skill::kGeneral, AgentRole::kExpert}.valid());
  CHECK(AgentProfile{"a", bb, Skill::kGeneral, AgentRole::kDeliberator}.valid());
  CHECK_FALSE(AgentProfile{"a", bb, Skill::kPot, AgentRole::kDeliberator}.valid());
  CHECK(parse_skill("knowledge") == Skill::kGenRead);
  CHECK(parse_skill("self_ask") == Skill::kSelfAsk);
  CHECK_FALSE(parse_skill("magic").has_value());
}

TEST_CASE("exact-match judge") {
  auto j = EquivalenceJudge::exact_match();
  Question q{"q", "?", {"The Eiffel Tower"}};
  CHECK(j.equivalent(q, "eiffel tower", "The Eiffel Tower."));
  CHECK_FALSE(j.equivalent(q, "eiffel", "tower"));
  CHECK(j.matches_reference(q, "Eiffel Tower"));
}

TEST_CASE("llm judge asks in canonical order and short-circuits identical answers") {
  std::mutex mu;
  std::vector<std::pair<std::string, std::string>> asked;
  auto bb = mock_backbone("judge", [&](const CompletionRequest& r) {
    std::lock_guard lock(mu);
    asked.emplace_back(tag(r, "answer_a"), tag(r, "answer_b"));
    CHECK(r.temperature == 0.0);
    return text_reply("Yes");
  });
  auto j = EquivalenceJudge::llm(bb, &prompts(), {});
  Question q{"q", "?", {"x"}};
  CHECK(j.equivalent(q, "zeta", "alpha"));
  CHECK(j.equivalent(q, "alpha", "zeta"));
  REQUIRE(asked.size() == 2);
  CHECK(asked[0] == asked[1]);
  CHECK(asked[0].first == "alpha");
  CHECK(j.equivalent(q, "The Alpha", "alpha"));
  CHECK(asked.size() == 2);
}

TEST_CASE("llm judge retries an unparseable verdict once, then falls back") {
  std::atomic<int> calls{0};
  auto bb = mock_backbone("judge", [&](const CompletionRequest&) {
    ++calls;
    return text_reply("perhaps");
  });
  auto j = EquivalenceJudge::llm(bb, &prompts(), {});
  Question q{"q", "?", {"x"}};
  CHECK_FALSE(j.equivalent(q, "neon", "Neon (Ne)"));
  CHECK(calls == 2);
}

TEST_CASE("cot expert: one call, verbalized confidence") {
  std::atomic<int> calls{0};
  auto bb = mock_backbone("m", [&](const CompletionRequest& r) {
    ++calls;
    CHECK(r.messages.size() == 1);
    CHECK(r.messages[0].content.find("Let's think step-by-step") != std::string::npos);
    CHECK(r.messages[0].content.find("Answer:<answer> Confidence:<confidence>") != std::string::npos);
    return text_reply("Answer: neon Confidence: 0.8");
  });
  auto rec = run_expert({"q", "Which gas?", {"neon"}}, {"e", bb, Skill::kCot, AgentRole::kExpert}, context());
  CHECK(calls == 1);
  CHECK(rec.stance.answer == "neon");
  REQUIRE(rec.confidence);
  CHECK(rec.confidence->value == 0.8);
  CHECK(rec.confidence->source == ConfidenceSource::kVerbalized);
}

TEST_CASE("logit confidence wins on a backbone that exposes token probabilities") {
  auto bb = mock_backbone(
      "m",
      [](const CompletionRequest& r) {
        CHECK(r.want_token_probs);
        auto out = text_reply("Answer: neon Confidence: 0.9");
        out.token_probs = std::vector<double>{0.5, 0.5};
        return out;
      },
      true);
  auto rec = run_expert({"q", "?", {"neon"}}, {"e", bb, Skill::kPot, AgentRole::kExpert}, context());
  REQUIRE(rec.confidence);
  CHECK(rec.confidence->value == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rec.confidence->source == ConfidenceSource::kLogit);
}

TEST_CASE("self-ask expert feeds search results into its second call") {
  LocalSearchStub search;
  search.add("q", {{"Noble gases", "Neon glows red-orange."}});
  std::vector<CompletionRequest> seen;
  std::mutex mu;
  auto bb = mock_backbone("m", [&](const CompletionRequest& r) {
    std::lock_guard lock(mu);
    seen.push_back(r);
    if (tag(r, "call_kind") == "scaffold") return text_reply("Follow up: Which gas glows red?");
    return text_reply("Answer: neon Confidence: 0.7");
  });
  auto rec = run_expert({"q", "Which gas glows red?", {"neon"}}, {"e", bb, Skill::kSelfAsk, AgentRole::kExpert},
                        context(&search));
  REQUIRE(seen.size() == 2);
  CHECK(tag(seen[1], "call_kind") == "stance");
  CHECK(seen[1].messages.size() == 3);
  CHECK(seen[1].messages[2].content.find("Neon glows red-orange.") != std::string::npos);
  CHECK(rec.stance.answer == "neon");
}

TEST_CASE("genread expert makes a document call, then answers") {
  std::atomic<int> calls{0};
  auto bb = mock_backbone("m", [&](const CompletionRequest& r) {
    ++calls;
    if (tag(r, "call_kind") == "scaffold") return text_reply("Neon is a noble gas.");
    CHECK(r.messages[1].content == "Neon is a noble gas.");
    return text_reply("Answer: neon Confidence: 0.6");
  });
  auto rec = run_expert({"q", "?", {"neon"}}, {"e", bb, Skill::kGenRead, AgentRole::kExpert}, context());
  CHECK(calls == 2);
  CHECK(*rec.stance.confidence == 0.6);
}

TEST_CASE("stage 1 over a uniform population") {
  auto bb = mock_backbone("m", [](const CompletionRequest&) { return text_reply("Answer: neon Confidence: 0.8"); });
  auto recs = collect_stage1({"q", "?", {"neon"}}, experts(bb, Skill::kCot, 6), context());
  REQUIRE(recs.size() == 6);
  for (const auto& r : recs) {
    CHECK(r.stance.answer == "neon");
    CHECK(r.confidence->value == 0.8);
  }
}

TEST_CASE("a failing expert abstains, and all failing is AllAbstained") {
  auto bb = mock_backbone("m", [](const CompletionRequest& r) -> CompletionResponse {
    if (tag(r, "agent_id") == "e3") throw TransportError("down");
    return text_reply("Answer: neon Confidence: 0.8");
  });
  auto recs = collect_stage1({"q", "?", {"neon"}}, experts(bb, Skill::kCot, 6), context());
  int answering = 0;
  for (const auto& r : recs) answering += !r.abstained();
  CHECK(answering == 5);
  CHECK(recs[3].error.has_value());

  auto down = mock_backbone("m", [](const CompletionRequest&) -> CompletionResponse { throw TransportError("down"); });
  CHECK_THROWS_AS(collect_stage1({"q", "?", {"neon"}}, experts(down, Skill::kCot, 3), context()), AllAbstained);
}

TEST_CASE("clustering examples") {
  Question q{"q", "?", {"42"}};
  std::vector<Stage1Record> recs{answered("a", "42", 0.9), answered("b", "42", 0.7), answered("c", "41", 0.95)};
  auto s = cluster_stances(q, recs, EquivalenceJudge::exact_match());
  REQUIRE(s.stances.size() == 2);
  CHECK(s.stances[0].representative_answer == "42");
  CHECK(s.stances[0].frequency == 2);
  CHECK(s.stances[0].mean_confidence == doctest::Approx(0.8));
  CHECK(s.stances[1].representative_answer == "41");
  CHECK(s.stances[1].frequency == 1);

  auto judge = relation_judge([](const std::string& a, const std::string& b) {
    std::set<std::string> pair{a, b};
    return pair == std::set<std::string>{"neon", "Neon (Ne)"};
  });
  std::vector<Stage1Record> gas{answered("a", "neon", 0.6), answered("b", "Neon (Ne)", 0.8),
                                answered("c", "argon", 0.9)};
  auto g = cluster_stances(q, gas, judge);
  REQUIRE(g.stances.size() == 2);
  CHECK(g.stances[0].frequency == 2);
  CHECK(g.stances[0].mean_confidence == doctest::Approx(0.7));
  CHECK(g.stances[0].representative_answer == "Neon (Ne)");
  CHECK(g.stances[0].supporters == std::vector<std::string>{"a", "b"});

  std::vector<Stage1Record> with_gap{answered("a", "x", 0.5), abstaining("b"), answered("c", "x", 0.5)};
  auto w = cluster_stances(q, with_gap, EquivalenceJudge::exact_match());
  CHECK(w.abstentions == 1);
  CHECK(w.stances[0].frequency == 2);

  std::vector<Stage1Record> silent{abstaining("a")};
  CHECK_THROWS_AS(cluster_stances(q, silent, EquivalenceJudge::exact_match()), AllAbstained);
}

TEST_CASE("clustering properties on random multisets") {
  Gen gen(21);
  const Question q{"q", "?", {"a0"}};
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t universe = gen.range(1, 8);
    // Random symmetric relation over the universe.
    std::vector<std::vector<bool>> edge(universe, std::vector<bool>(universe, false));
    for (std::size_t i = 0; i < universe; ++i) {
      edge[i][i] = true;
      for (std::size_t j = i + 1; j < universe; ++j) edge[i][j] = edge[j][i] = gen.coin(0.25);
    }
    auto id = [](const std::string& s) { return static_cast<std::size_t>(std::stoul(s.substr(1))); };
    auto judge = relation_judge([&](const std::string& a, const std::string& b) { return edge[id(a)][id(b)]; });

    std::vector<Stage1Record> recs;
    const std::size_t n = gen.range(1, 12);
    for (std::size_t i = 0; i < n; ++i) {
      if (gen.coin(0.1)) {
        recs.push_back(abstaining("x" + std::to_string(i)));
      } else {
        recs.push_back(answered("x" + std::to_string(i), "a" + std::to_string(gen.index(universe)),
                                std::round(gen.uniform() * 4) / 4));
      }
    }
    if (std::all_of(recs.begin(), recs.end(), [](const auto& r) { return r.abstained(); })) continue;
    auto base = cluster_stances(q, recs, judge);

    int total = base.abstentions;
    for (const auto& s : base.stances) total += s.frequency;
    CHECK(total == static_cast<int>(n));

    // Transitive closure over the answers that occur.
    std::vector<bool> present(universe, false);
    for (const auto& r : recs) {
      if (!r.abstained()) present[id(r.stance.answer)] = true;
    }
    auto reach = edge;
    for (std::size_t k = 0; k < universe; ++k) {
      for (std::size_t i = 0; i < universe; ++i) {
        for (std::size_t j = 0; j < universe; ++j) {
          if (present[k] && present[i] && present[j] && reach[i][k] && reach[k][j]) reach[i][j] = true;
        }
      }
    }
    std::map<std::string, int> stance_of;
    for (const auto& s : base.stances) {
      for (const auto& m : s.member_answers) stance_of[m] = s.stance_id;
    }
    for (const auto& [a, sa] : stance_of) {
      for (const auto& [b, sb] : stance_of) CHECK((sa == sb) == static_cast<bool>(reach[id(a)][id(b)]));
    }

    // Permuting the records changes nothing.
    auto shuffled = recs;
    std::shuffle(shuffled.begin(), shuffled.end(), gen.stream());
    auto again = cluster_stances(q, shuffled, judge);
    REQUIRE(again.stances.size() == base.stances.size());
    for (std::size_t i = 0; i < base.stances.size(); ++i) {
      CHECK(again.stances[i].representative_answer == base.stances[i].representative_answer);
      CHECK(again.stances[i].member_answers == base.stances[i].member_answers);
      CHECK(again.stances[i].supporters == base.stances[i].supporters);
      CHECK(again.stances[i].mean_confidence == base.stances[i].mean_confidence);
    }
  }
}

TEST_CASE("selection gives every slot to the only calibrated skill") {
  auto questions = toy_questions(16, "v");
  auto bb = mock_backbone("m", [](const CompletionRequest& r) {
    const auto qid = tag(r, "question_id");
    if (tag(r, "skill") == "pot") return text_reply("Answer: word" + qid.substr(1) + " Confidence: 0.9");
    return text_reply("Answer: wrong Confidence: 0.9");
  });
  std::vector<Skill> skills{Skill::kCot, Skill::kPot, Skill::kSelfAsk, Skill::kGenRead};
  std::vector<Backbone> bbs{bb};
  auto sel = select_agents(questions, skills, bbs, 16, 0.2, 6, EquivalenceJudge::exact_match(), context());
  REQUIRE(sel.size() == 1);
  const auto& r = sel[0].result;
  CHECK_FALSE(r.fallback);
  for (const auto& [skill, slots] : r.slots) CHECK(slots == (skill == "pot" ? 6u : 0u));
  for (const auto& [skill, score] : r.all_scores) {
    CHECK(score == doctest::Approx(skill == "pot" ? 0.9 : -0.9).epsilon(1e-12));
  }

  auto agents = build_expert_agents(sel, bbs);
  REQUIRE(agents.size() == 6);
  CHECK(agents[0].agent_id == "m/pot/1");
  CHECK(agents[0].skill == Skill::kPot);
}

TEST_CASE("selection falls back when every candidate abstains") {
  auto bb = mock_backbone("m", [](const CompletionRequest&) { return text_reply("I don't know."); });
  std::vector<Skill> skills{Skill::kCot, Skill::kPot};
  std::vector<Backbone> bbs{bb};
  auto sel = select_agents(toy_questions(4, "v"), skills, bbs, 4, 0.2, 6, EquivalenceJudge::exact_match(), context());
  CHECK(sel[0].result.fallback);
  CHECK(sel[0].result.slots[0].second == 6);
}

TEST_CASE("identical skills split the slots evenly") {
  auto questions = toy_questions(8, "v");
  auto bb = sim_backbone("sim", 4, SimAgentParams{1.0, 0.0, 0.0, 0.0, ""}, questions);
  std::vector<Skill> skills{Skill::kCot, Skill::kPot};
  std::vector<Backbone> bbs{bb};
  auto sel = select_agents(questions, skills, bbs, 8, 0.2, 6, EquivalenceJudge::exact_match(), context());
  CHECK(sel[0].result.slots[0].second == 3);
  CHECK(sel[0].result.slots[1].second == 3);
}

TEST_CASE("selection is split per backbone") {
  CHECK(backbone_shares(6, 3) == std::vector<std::size_t>{2, 2, 2});
  CHECK(backbone_shares(7, 3) == std::vector<std::size_t>{3, 2, 2});
  CHECK(backbone_shares(2, 3) == std::vector<std::size_t>{1, 1, 0});

  auto questions = toy_questions(4, "v");
  std::vector<Backbone> bbs{sim_backbone("a", 1, {}, questions), sim_backbone("b", 1, {}, questions),
                            sim_backbone("c", 1, {}, questions)};
  std::vector<Skill> skills{Skill::kCot};
  auto sel = select_agents(questions, skills, bbs, 4, 0.0, 6, EquivalenceJudge::exact_match(), context());
  REQUIRE(sel.size() == 3);
  for (const auto& s : sel) CHECK(s.result.total_slots == 2);

  CHECK_THROWS_AS(select_agents(questions, skills, bbs, 5, 0.2, 6, EquivalenceJudge::exact_match(), context()),
                  ConfigError);
}
