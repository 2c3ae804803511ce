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

#include <atomic>
#include <mutex>
#include <numeric>
#include <set>

#include "collabcal/deliberation.hpp"
#include "collabcal/errors.hpp"
#include "collabcal/search.hpp"
#include "support.hpp"

using namespace collabcal;
using namespace collabcal::testing;

namespace {

const PromptRegistry& prompts() {
  static const PromptRegistry reg = PromptRegistry::builtin();
  return reg;
}

AgentContext context(const SearchProvider* search = nullptr, std::uint64_t seed = 3) {
  AgentContext ctx;
  ctx.prompts = &prompts();
  ctx.search = search;
  ctx.seed = seed;
  return ctx;
}

Stance stance(int id, std::string answer, int freq, double mean) {
  Stance s;
  s.stance_id = id;
  s.representative_answer = answer;
  s.member_answers = {answer};
  s.frequency = freq;
  s.mean_confidence = mean;
  return s;
}

std::vector<Argument> arguments_for(const std::vector<std::pair<std::string, int>>& authors) {
  std::vector<Argument> out;
  for (const auto& [a, s] : authors) out.push_back({a, s, "Because " + a + " says so.", false});
  return out;
}

DeliberationRecord record(std::string agent, std::string answer, double post) {
  DeliberationRecord r;
  r.agent_id = std::move(agent);
  r.prior_answer = answer;
  r.revised_answer = std::move(answer);
  r.posterior_confidence = post;
  return r;
}

const Question kQ{"q1", "Which element has atomic number 10?", {"neon"}};

}  // namespace

TEST_CASE("apportionment examples") {
  CHECK(apportion(std::vector<int>{4, 2}, 6) == std::vector<std::size_t>{4, 2});
  CHECK(apportion(std::vector<int>{3, 2, 1}, 6) == std::vector<std::size_t>{3, 2, 1});
  CHECK(apportion(std::vector<int>{5, 1}, 3) == std::vector<std::size_t>{3, 0});
  CHECK(apportion(std::vector<int>{1, 1, 1}, 2) == std::vector<std::size_t>{1, 1, 0});
}

TEST_CASE("apportionment properties") {
  Gen gen(5);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<int> freqs(gen.range(1, 6));
    for (auto& f : freqs) f = static_cast<int>(gen.range(1, 9));
    std::sort(freqs.rbegin(), freqs.rend());
    const std::size_t seats = gen.range(1, 12);
    const auto out = apportion(freqs, seats);
    CHECK(std::accumulate(out.begin(), out.end(), std::size_t{0}) == seats);
    CHECK(out[0] >= 1);
    const int total = std::accumulate(freqs.begin(), freqs.end(), 0);
    for (std::size_t i = 0; i < freqs.size(); ++i) {
      const double quota = static_cast<double>(seats) * freqs[i] / total;
      // Off by at most one seat from the quota, plus the seat the leader may borrow.
      CHECK(static_cast<double>(out[i]) <= std::floor(quota) + 2);
      CHECK(static_cast<double>(out[i]) + 2 >= std::ceil(quota));
    }
  }
}

TEST_CASE("assignment hands deliberators out in order") {
  auto bb = mock_backbone("m", [](const CompletionRequest&) { return text_reply(""); });
  std::vector<Stance> stances{stance(0, "A", 4, 0.8), stance(1, "B", 2, 0.6)};
  auto ds = deliberators(bb, 6);
  auto a = assign_stances(stances, ds);
  REQUIRE(a.size() == 6);
  CHECK(a[0] == std::pair<std::string, int>{"d1", 0});
  CHECK(a[3] == std::pair<std::string, int>{"d4", 0});
  CHECK(a[4] == std::pair<std::string, int>{"d5", 1});
  CHECK_THROWS_AS(assign_stances(stances, std::span<const AgentProfile>{}), ConfigError);
}

TEST_CASE("arguments: one per deliberator, failures become placeholders") {
  auto bb = mock_backbone("m", [](const CompletionRequest& r) -> CompletionResponse {
    if (tag(r, "agent_id") == "d6") throw TransportError("down");
    CHECK(tag(r, "call_kind") == "argument");
    return text_reply("Argument: it is " + tag(r, "stance") + ".");
  });
  std::vector<Stance> stances{stance(0, "A", 4, 0.8), stance(1, "B", 2, 0.6)};
  auto ds = deliberators(bb, 6);
  auto a = assign_stances(stances, ds);
  auto args = generate_arguments(kQ, stances, a, ds, context());
  REQUIRE(args.size() == 6);
  CHECK(args[0].text == "it is A.");
  CHECK(args[4].text == "it is B.");
  CHECK(args[5].placeholder);
  CHECK(args[5].text == kNoArgument);
  CHECK(args[5].stance_id == 1);
}

TEST_CASE("factuality check") {
  LocalSearchStub search;
  search.add("q1", {{"Neon", "Neon was discovered in 1898 by Ramsay and Travers."}});
  std::vector<std::string> kinds;
  std::mutex mu;
  std::string premises_reply;
  auto bb = mock_backbone("v", [&](const CompletionRequest& r) {
    std::lock_guard lock(mu);
    kinds.push_back(tag(r, "call_kind"));
    if (tag(r, "call_kind") == "premises") return text_reply(premises_reply);
    CHECK(r.messages[0].content.find("1898") != std::string::npos);
    return text_reply("Verdict: contradicted");
  });
  AgentProfile verifier{"verifier", bb, Skill::kGeneral, AgentRole::kDeliberator};
  Argument arg{"d1", 0, "Neon was discovered in 1900, so it is neon.", false};

  premises_reply = "No premises.";
  CHECK(verify_factuality(kQ, arg, "neon", &verifier, context(&search)).empty());
  CHECK(kinds == std::vector<std::string>{"premises"});

  kinds.clear();
  premises_reply = "Premise: X was discovered in 1900 | unsure\nPremise: neon is a gas | sure";
  CHECK(verify_factuality(kQ, arg, "neon", &verifier, context(&search)) ==
        "Unfactual: \"X was discovered in 1900\"");
  CHECK(kinds == std::vector<std::string>{"premises", "premise_check"});

  OfflineSearch offline;
  CHECK(verify_factuality(kQ, arg, "neon", &verifier, context(&offline)).empty());
  CHECK(verify_factuality(kQ, arg, "neon", nullptr, context(&search)).empty());

  Argument placeholder{"d2", 0, std::string(kNoArgument), true};
  kinds.clear();
  CHECK(verify_factuality(kQ, placeholder, "neon", &verifier, context(&search)).empty());
  CHECK(kinds.empty());
}

TEST_CASE("rating plan: k raters per argument, never the author") {
  auto bb = mock_backbone("m", [](const CompletionRequest&) { return text_reply(""); });
  Gen gen(9);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = gen.range(1, 10);
    const std::size_t k = gen.range(1, 4);
    auto ds = deliberators(bb, n);
    std::vector<std::pair<std::string, int>> authors;
    for (const auto& d : ds) authors.emplace_back(d.agent_id, 0);
    auto args = arguments_for(authors);
    Question q{"p" + std::to_string(trial), "?", {"x"}};
    auto plan = plan_ratings(q, args, ds, k, 11);
    CHECK(plan.k == std::min(k, n - 1));
    std::vector<std::size_t> load(n, 0);
    for (std::size_t i = 0; i < args.size(); ++i) {
      REQUIRE(plan.raters[i].size() == plan.k);
      std::set<std::size_t> distinct(plan.raters[i].begin(), plan.raters[i].end());
      CHECK(distinct.size() == plan.k);
      CHECK_FALSE(distinct.count(i));
      for (auto r : plan.raters[i]) ++load[r];
    }
    // Round-robin: every deliberator rates exactly k arguments.
    for (auto l : load) CHECK(l == plan.k);
    auto again = plan_ratings(q, args, ds, k, 11);
    CHECK(again.raters == plan.raters);
  }
}

TEST_CASE("rating six arguments") {
  std::atomic<int> calls{0};
  std::mutex mu;
  std::vector<std::string> notes_seen;
  auto bb = mock_backbone("m", [&](const CompletionRequest& r) {
    ++calls;
    CHECK(tag(r, "call_kind") == "rating");
    std::lock_guard lock(mu);
    notes_seen.push_back(r.messages[0].content);
    if (tag(r, "agent_id") == "d2") return text_reply("I refuse to rate.");
    return text_reply("Consistency: good, Clarity: excellent, Conciseness: good");
  });
  std::vector<Stance> stances{stance(0, "A", 4, 0.8), stance(1, "B", 2, 0.6)};
  auto ds = deliberators(bb, 6);
  auto args = arguments_for({{"d1", 0}, {"d2", 0}, {"d3", 0}, {"d4", 0}, {"d5", 1}, {"d6", 1}});
  args[5].placeholder = true;
  args[5].text = std::string(kNoArgument);
  auto fb = rate_arguments(kQ, args, stances, ds, 2, nullptr, context());
  REQUIRE(fb.size() == 6);
  CHECK(calls == 10);
  for (std::size_t i = 0; i < 6; ++i) {
    REQUIRE(fb[i].ratings.size() == 2);
    for (const auto& r : fb[i].ratings) {
      CHECK(r.rater_id != fb[i].author_id);
      if (i == 5) {
        CHECK(r.rating.mean_value() == 0.0);
      } else if (r.rater_id == "d2") {
        CHECK(r.substituted);
        CHECK(r.rating.consistency == RatingLevel::kModest);
      } else {
        CHECK(r.rating.mean_value() == doctest::Approx(7.0 / 9.0));
      }
    }
    CHECK(fb[i].summarized.rfind("Rater 1: Consistency: ", 0) == 0);
    CHECK(fb[i].summarized.find("Factuality: no issues found") != std::string::npos);
  }
  bool any_note = false;
  for (const auto& p : notes_seen) any_note |= p.find("you supported the answer") != std::string::npos;
  CHECK(any_note);
}

TEST_CASE("two deliberators reduce k to one") {
  auto bb = mock_backbone("m", [](const CompletionRequest&) {
    return text_reply("Consistency: bad, Clarity: bad, Conciseness: modest");
  });
  std::vector<Stance> stances{stance(0, "A", 1, 0.8), stance(1, "B", 1, 0.6)};
  auto ds = deliberators(bb, 2);
  auto args = arguments_for({{"d1", 0}, {"d2", 1}});
  auto fb = rate_arguments(kQ, args, stances, ds, 2, nullptr, context());
  CHECK(fb[0].ratings.size() == 1);
  CHECK(fb[0].ratings[0].rater_id == "d2");
  CHECK(fb[1].ratings[0].rater_id == "d1");
}

TEST_CASE("feedback quality and summary") {
  std::vector<RaterScore> r{{"a", {RatingLevel::kExcellent, RatingLevel::kExcellent, RatingLevel::kExcellent, {}}, false},
                            {"b", ParsedRating::minimum(), false}};
  CHECK(feedback_quality(r, "") == doctest::Approx(0.5));
  CHECK(feedback_quality(r, "Unfactual: \"x\"") == doctest::Approx(0.25));
  CHECK(feedback_quality({}, "") == 0.5);
  CHECK(summarize_feedback({}, "Unfactual: \"x\"") == "Factuality: Unfactual: \"x\"");
}

TEST_CASE("pairing") {
  auto two = arguments_for({{"d1", 0}, {"d2", 0}, {"d3", 1}});
  HashStream rng(1);
  for (int i = 0; i < 100; ++i) {
    auto p = pair_arguments(0, two, rng);
    CHECK(two[p.supporting].stance_id == 0);
    REQUIRE(p.opposing);
    CHECK(*p.opposing == 2);
  }
  auto one = arguments_for({{"d1", 0}, {"d2", 0}});
  CHECK_FALSE(pair_arguments(0, one, rng).opposing.has_value());

  auto three = arguments_for({{"d1", 0}, {"d2", 1}, {"d3", 2}, {"d4", 2}});
  std::set<int> opposed;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    HashStream a(seed), b(seed);
    auto pa = pair_arguments(0, three, a);
    auto pb = pair_arguments(0, three, b);
    CHECK(pa.supporting == pb.supporting);
    CHECK(pa.opposing == pb.opposing);
    opposed.insert(three[*pa.opposing].stance_id);
  }
  CHECK(opposed == std::set<int>{1, 2});
  CHECK_THROWS_AS(pair_arguments(5, three, rng), Error);
}

TEST_CASE("revision") {
  std::string reply;
  std::string prompt;
  auto bb = mock_backbone("m", [&](const CompletionRequest& r) -> CompletionResponse {
    prompt = r.messages[0].content;
    if (reply.empty()) throw TransportError("down");
    return text_reply(reply);
  });
  AgentProfile agent{"d1", bb, Skill::kGeneral, AgentRole::kDeliberator};
  DeliberationRecord rec;
  rec.agent_id = "d1";
  rec.prior_answer = "argon";
  rec.prior_confidence = 0.55;
  rec.supporting_argument = {"d1", 1, "Argon is common.", false};
  Feedback mine;
  mine.summarized = "Factuality: no issues found";
  Feedback theirs;
  theirs.summarized = "Rater 1: Consistency: excellent, Clarity: good, Conciseness: good. Factuality: no issues found";
  Argument against{"d2", 0, "Neon has atomic number 10.", false};

  reply = "Answer: neon Rationales: the opposing argument is well rated.";
  auto r = revise(kQ, agent, rec, mine, std::make_pair(against, theirs), "neon", {1, 4}, context());
  CHECK(r.answer == "neon");
  CHECK(r.rationale.find("well rated") != std::string::npos);
  CHECK(prompt.find("0.55") != std::string::npos);
  CHECK(prompt.find("Neon has atomic number 10.") != std::string::npos);

  reply = "Answer: argon Rationales: nobody disagrees.";
  revise(kQ, agent, rec, mine, std::nullopt, "", {5, 0}, context());
  std::size_t fillers = 0;
  for (auto pos = prompt.find(kNoDissent); pos != std::string::npos; pos = prompt.find(kNoDissent, pos + 1)) ++fillers;
  CHECK(fillers == 2);

  reply.clear();
  auto failed = revise(kQ, agent, rec, mine, std::nullopt, "", {5, 0}, context());
  CHECK(failed.answer == "argon");
  CHECK(failed.rationale == kRevisionFailed);
}

TEST_CASE("posterior confidence") {
  std::string reply;
  auto bb = mock_backbone("m", [&](const CompletionRequest& r) -> CompletionResponse {
    CHECK(tag(r, "call_kind") == "posterior");
    if (reply.empty()) throw TransportError("down");
    return text_reply(reply);
  });
  AgentProfile agent{"d1", bb, Skill::kGeneral, AgentRole::kDeliberator};
  DeliberationRecord rec;
  rec.prior_confidence = 0.6;
  rec.confidence_rationale = "The argument holds.";
  reply = "Confidence: 0.85";
  CHECK(posterior_confidence(kQ, agent, rec, context()) == doctest::Approx(0.85));
  reply = "Confidence: 1.7";
  CHECK(posterior_confidence(kQ, agent, rec, context()) == 1.0);
  reply = "I cannot say.";
  CHECK(posterior_confidence(kQ, agent, rec, context()) == 0.6);
  reply.clear();
  CHECK(posterior_confidence(kQ, agent, rec, context()) == 0.6);
}

TEST_CASE("final verdict examples") {
  auto judge = EquivalenceJudge::exact_match();
  std::vector<DeliberationRecord> four_two{record("d1", "A", 0.9), record("d2", "A", 0.8), record("d3", "A", 0.85),
                                           record("d4", "A", 0.85), record("d5", "B", 0.7), record("d6", "B", 0.6)};
  auto v = final_verdict(kQ, four_two, judge);
  CHECK(v.final_answer == "A");
  CHECK(v.final_confidence == doctest::Approx(0.85));
  CHECK(v.vote_counts["A"] == 4);
  CHECK(v.vote_counts["B"] == 2);
  CHECK(v.supporting_records == std::vector<std::string>{"d1", "d2", "d3", "d4"});
  CHECK(v.mean_confidence_all == doctest::Approx(4.7 / 6));

  std::vector<DeliberationRecord> tie{record("d1", "A", 0.6), record("d2", "A", 0.6), record("d3", "A", 0.6),
                                      record("d4", "B", 0.9), record("d5", "B", 0.9), record("d6", "B", 0.9)};
  auto t = final_verdict(kQ, tie, judge);
  CHECK(t.final_answer == "B");
  CHECK(t.final_confidence == doctest::Approx(0.9));

  std::vector<DeliberationRecord> even{record("d1", "B", 0.5), record("d2", "A", 0.5)};
  CHECK(final_verdict(kQ, even, judge).final_answer == "A");

  std::vector<DeliberationRecord> single{record("d1", "A", 0.42)};
  auto s = final_verdict(kQ, single, judge);
  CHECK(s.final_answer == "A");
  CHECK(s.final_confidence == 0.42);
}

TEST_CASE("final verdict is invariant to record order") {
  Gen gen(17);
  auto judge = EquivalenceJudge::exact_match();
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<DeliberationRecord> recs;
    const std::size_t n = gen.range(1, 9);
    for (std::size_t i = 0; i < n; ++i) {
      recs.push_back(record("d" + std::to_string(i), std::string(1, static_cast<char>('A' + gen.index(3))),
                            std::round(gen.uniform() * 10) / 10));
    }
    auto base = final_verdict(kQ, recs, judge);
    std::shuffle(recs.begin(), recs.end(), gen.stream());
    auto again = final_verdict(kQ, recs, judge);
    CHECK(again.final_answer == base.final_answer);
    CHECK(again.final_confidence == base.final_confidence);
    CHECK(again.vote_counts == base.vote_counts);
    int best = 0;
    for (const auto& [_, c] : base.vote_counts) best = std::max(best, c);
    CHECK(base.vote_counts.at(base.final_answer) == best);
  }
}

TEST_CASE("full deliberation on the simulator is deterministic") {
  auto questions = toy_questions(1);
  auto bb = sim_backbone("sim", 7, SimAgentParams{0.6, 0.0, 0.1, 0.5, ""}, questions);
  LocalSearchStub search;
  search.add(questions[0].id, {{"ref", "The answer to the question is word0."}});
  AgentProfile verifier{"verifier", bb, Skill::kGeneral, AgentRole::kDeliberator};
  std::vector<Stance> stances{stance(0, "word0", 4, 0.8), stance(1, "decoy", 2, 0.7)};
  auto ds = deliberators(bb, 6);
  auto run = [&] {
    return deliberate(questions[0], stances, ds, 2, &verifier, EquivalenceJudge::exact_match(), context(&search));
  };
  auto a = run();
  auto b = run();
  REQUIRE(a.records.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.records[i].revised_answer == b.records[i].revised_answer);
    CHECK(a.records[i].posterior_confidence == b.records[i].posterior_confidence);
    CHECK(a.records[i].posterior_confidence >= 0.0);
    CHECK(a.records[i].posterior_confidence <= 1.0);
  }
  CHECK(a.verdict.final_answer == b.verdict.final_answer);
  CHECK(a.verdict.final_confidence == b.verdict.final_confidence);

  std::vector<AgentProfile> wrong{{"e", bb, Skill::kCot, AgentRole::kExpert}};
  CHECK_THROWS_AS(deliberate(questions[0], stances, wrong, 2, nullptr, EquivalenceJudge::exact_match(), context()),
                  ConfigError);
}
