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

#include "collabcal/deliberation.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "collabcal/errors.hpp"
#include "collabcal/parallel.hpp"
#include "collabcal/simulated_provider.hpp"
#include "collabcal/text.hpp"

namespace collabcal {

namespace {

constexpr std::string_view kSameStanceNote =
    "Note in the earlier debate, you supported the answer corresponding to this argument.";

const Stance& stance_by_id(std::span<const Stance> stances, int id) {
  auto it = std::find_if(stances.begin(), stances.end(), [&](const Stance& s) { return s.stance_id == id; });
  if (it == stances.end()) throw Error("unknown stance id " + std::to_string(id));
  return *it;
}

std::string hint_key(std::string_view k) { return std::string(k); }

double sorted_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

}  // namespace

std::vector<std::size_t> apportion(std::span<const int> frequencies, std::size_t seats) {
  std::vector<std::size_t> out(frequencies.size(), 0);
  if (frequencies.empty() || seats == 0) return out;
  long long total = 0;
  for (int f : frequencies) total += std::max(f, 0);
  if (total == 0) {
    out[0] = seats;
    return out;
  }
  // Exact integer quotas: seats * f / total = floor + rem / total.
  std::vector<long long> rem(frequencies.size());
  std::size_t given = 0;
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    const long long scaled = static_cast<long long>(seats) * std::max(frequencies[i], 0);
    out[i] = static_cast<std::size_t>(scaled / total);
    rem[i] = scaled % total;
    given += out[i];
  }
  std::vector<std::size_t> order(frequencies.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; given < seats; ++k, ++given) ++out[order[k % order.size()]];

  // The leading stance always gets a voice.
  if (out[0] == 0) {
    for (std::size_t i = out.size(); i-- > 1;) {
      if (out[i] > 0) {
        --out[i];
        ++out[0];
        break;
      }
    }
  }
  return out;
}

StanceAssignment assign_stances(std::span<const Stance> stances,
                                std::span<const AgentProfile> deliberators) {
  if (stances.empty()) throw Error("no stances to assign");
  if (deliberators.empty()) throw ConfigError("deliberation needs at least one deliberator");
  std::vector<int> freqs;
  for (const auto& s : stances) freqs.push_back(s.frequency);
  const auto seats = apportion(freqs, deliberators.size());
  StanceAssignment out;
  std::size_t next = 0;
  for (std::size_t s = 0; s < stances.size(); ++s) {
    for (std::size_t k = 0; k < seats[s]; ++k) {
      out.emplace_back(deliberators[next++].agent_id, stances[s].stance_id);
    }
  }
  return out;
}

std::vector<Argument> generate_arguments(const Question& question, std::span<const Stance> stances,
                                         const StanceAssignment& assignment,
                                         std::span<const AgentProfile> deliberators,
                                         const AgentContext& ctx) {
  if (assignment.empty()) throw Error("empty stance assignment");
  std::vector<Argument> out(assignment.size());
  parallel_for(
      assignment.size(),
      [&](std::size_t i) {
        const auto& [agent_id, stance_id] = assignment[i];
        auto agent = std::find_if(deliberators.begin(), deliberators.end(),
                                  [&](const AgentProfile& a) { return a.agent_id == agent_id; });
        auto& arg = out[i];
        arg.author_id = agent_id;
        arg.stance_id = stance_id;
        try {
          if (agent == deliberators.end()) throw Error("unknown deliberator " + agent_id);
          const auto& stance = stance_by_id(stances, stance_id).representative_answer;
          auto req = tagged_request(
              *agent, question, to_string(CallKind::kArgument),
              ctx.prompts->render(templates::kArgumentGeneration,
                                  {{"QUERY", question.text}, {"STANCE", stance}}),
              ctx.calls.deliberation_temperature, ctx.calls.max_tokens);
          req.context[hint_key(sim_hints::kStance)] = stance;
          arg.text = parse_argument(complete(req, *agent->backbone.provider).text);
        } catch (const std::exception& e) {
          spdlog::warn("argument generation failed for {} on {}: {}", agent_id, question.id, e.what());
          arg.text.clear();
        }
        if (arg.text.empty()) {
          arg.text = std::string(kNoArgument);
          arg.placeholder = true;
        }
      },
      ctx.calls.fanout);
  return out;
}

std::string verify_factuality(const Question& question, const Argument& argument,
                              std::string_view stance_answer, const AgentProfile* verifier,
                              const AgentContext& ctx) {
  if (argument.placeholder) return {};
  if (verifier == nullptr || ctx.search == nullptr) {
    spdlog::warn("verifier unavailable; skipping factuality check on {}", question.id);
    return {};
  }
  try {
    auto req = tagged_request(*verifier, question, to_string(CallKind::kPremises),
                              ctx.prompts->render(templates::kPremiseExtraction,
                                                  {{"QUERY", question.text},
                                                   {"STANCE", std::string(stance_answer)},
                                                   {"ARGUMENT", argument.text}}),
                              ctx.calls.judge_temperature, ctx.calls.max_tokens, argument.author_id);
    req.context[hint_key(sim_hints::kStance)] = std::string(stance_answer);
    const auto premises = parse_premises(complete(req, *verifier->backbone.provider).text);

    std::vector<std::string> flagged;
    for (std::size_t i = 0; i < premises.size(); ++i) {
      const auto& premise = premises[i];
      if (premise.sure) continue;
      const auto results = ctx.search->search(question.id, premise.text);
      if (results.empty()) continue;
      const auto evidence = format_search_results(results);
      auto check = tagged_request(*verifier, question, to_string(CallKind::kPremiseCheck),
                                  ctx.prompts->render(templates::kPremiseCheck,
                                                      {{"PREMISE", premise.text}, {"EVIDENCE", evidence}}),
                                  ctx.calls.judge_temperature, ctx.calls.max_tokens,
                                  argument.author_id + "#" + std::to_string(i));
      check.context[hint_key(sim_hints::kStance)] = std::string(stance_answer);
      check.context[hint_key(sim_hints::kEvidence)] = evidence;
      auto verdict = parse_premise_verdict(complete(check, *verifier->backbone.provider).text);
      if (verdict == PremiseVerdict::kContradicted) flagged.push_back("Unfactual: \"" + premise.text + "\"");
    }
    return text::join(flagged, " ");
  } catch (const Error& e) {
    spdlog::warn("verifier unavailable for {} on {}: {}", argument.author_id, question.id, e.what());
    return {};
  }
}

RatingPlan plan_ratings(const Question& question, std::span<const Argument> arguments,
                        std::span<const AgentProfile> deliberators, std::size_t k,
                        std::uint64_t seed) {
  if (k == 0) throw ConfigError("feedback per argument must be at least 1");
  const std::size_t n = deliberators.size();
  RatingPlan plan;
  plan.k = n == 0 ? 0 : std::min(k, n - 1);
  if (plan.k < k) {
    spdlog::warn("insufficient raters on {}: {} deliberators, reducing feedback per argument to {}",
                 question.id, n, plan.k);
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  HashStream rng(hash_parts(seed, {question.id, "raters"}));
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> position(n);
  for (std::size_t p = 0; p < n; ++p) position[perm[p]] = p;

  for (const auto& arg : arguments) {
    auto author = std::find_if(deliberators.begin(), deliberators.end(),
                               [&](const AgentProfile& a) { return a.agent_id == arg.author_id; });
    std::vector<std::size_t> raters;
    const std::size_t p = author == deliberators.end()
                              ? 0
                              : position[static_cast<std::size_t>(author - deliberators.begin())];
    for (std::size_t j = 1; j <= plan.k; ++j) raters.push_back(perm[(p + j) % n]);
    plan.raters.push_back(std::move(raters));
  }
  return plan;
}

std::string summarize_feedback(const std::vector<RaterScore>& ratings, const std::string& notes) {
  std::string out;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    const auto& r = ratings[i].rating;
    out += "Rater " + std::to_string(i + 1) + ": Consistency: " + std::string(to_string(r.consistency)) +
           ", Clarity: " + std::string(to_string(r.clarity)) +
           ", Conciseness: " + std::string(to_string(r.conciseness)) + ". ";
  }
  out += "Factuality: " + (notes.empty() ? std::string("no issues found") : notes);
  return out;
}

double feedback_quality(const std::vector<RaterScore>& ratings, const std::string& notes) {
  double q = 0.5;
  if (!ratings.empty()) {
    double sum = 0.0;
    for (const auto& r : ratings) sum += r.rating.mean_value();
    q = sum / static_cast<double>(ratings.size());
  }
  return notes.empty() ? q : 0.5 * q;
}

std::vector<Feedback> rate_arguments(const Question& question, std::span<const Argument> arguments,
                                     std::span<const Stance> stances,
                                     std::span<const AgentProfile> deliberators, std::size_t k,
                                     const AgentProfile* verifier, const AgentContext& ctx) {
  const auto plan = plan_ratings(question, arguments, deliberators, k, ctx.seed);

  std::map<std::string, int> stance_of;
  for (const auto& a : arguments) stance_of[a.author_id] = a.stance_id;

  std::vector<Feedback> out(arguments.size());
  for (std::size_t i = 0; i < arguments.size(); ++i) {
    out[i].author_id = arguments[i].author_id;
    out[i].stance_id = arguments[i].stance_id;
    out[i].ratings.resize(plan.raters[i].size());
  }

  // Ratings and verifications form one phase.
  const std::size_t rating_jobs = plan.k * arguments.size();
  parallel_for(
      rating_jobs + arguments.size(),
      [&](std::size_t job) {
        if (job >= rating_jobs) {
          const std::size_t i = job - rating_jobs;
          out[i].factuality_notes =
              verify_factuality(question, arguments[i],
                                stance_by_id(stances, arguments[i].stance_id).representative_answer,
                                verifier, ctx);
          return;
        }
        const std::size_t i = job / plan.k;
        const std::size_t j = job % plan.k;
        const auto& arg = arguments[i];
        const auto& rater = deliberators[plan.raters[i][j]];
        auto& score = out[i].ratings[j];
        score.rater_id = rater.agent_id;
        if (arg.placeholder) {
          score.rating = ParsedRating::minimum();
          return;
        }
        const auto& stance = stance_by_id(stances, arg.stance_id).representative_answer;
        auto own = stance_of.find(rater.agent_id);
        const bool same_stance = own != stance_of.end() && own->second == arg.stance_id;
        try {
          auto req = tagged_request(
              rater, question, to_string(CallKind::kRating),
              ctx.prompts->render(templates::kArgumentRating,
                                  {{"ARGUMENT", arg.text},
                                   {"STANCE", stance},
                                   {"RATER-NOTE", same_stance ? std::string(kSameStanceNote) : ""}}),
              ctx.calls.deliberation_temperature, ctx.calls.max_tokens, arg.author_id);
          req.context[hint_key(sim_hints::kStance)] = stance;
          score.rating = parse_rating(complete(req, *rater.backbone.provider).text);
        } catch (const std::exception& e) {
          spdlog::warn("rating by {} of {} on {} unusable ({}); substituting 'modest'", rater.agent_id,
                       arg.author_id, question.id, e.what());
          score.rating = ParsedRating::neutral();
          score.substituted = true;
        }
      },
      ctx.calls.fanout);

  for (auto& fb : out) {
    fb.summarized = summarize_feedback(fb.ratings, fb.factuality_notes);
    fb.quality = feedback_quality(fb.ratings, fb.factuality_notes);
  }
  return out;
}

Pairing pair_arguments(int own_stance, std::span<const Argument> arguments, HashStream& rng) {
  std::vector<std::size_t> own;
  std::set<int> other_stances;
  for (std::size_t i = 0; i < arguments.size(); ++i) {
    if (arguments[i].stance_id == own_stance) {
      own.push_back(i);
    } else {
      other_stances.insert(arguments[i].stance_id);
    }
  }
  if (own.empty()) throw Error("no argument for stance " + std::to_string(own_stance));
  Pairing out;
  out.supporting = own[rng.index(own.size())];
  if (!other_stances.empty()) {
    std::vector<int> others(other_stances.begin(), other_stances.end());
    const int chosen = others[rng.index(others.size())];
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < arguments.size(); ++i) {
      if (arguments[i].stance_id == chosen) pool.push_back(i);
    }
    out.opposing = pool[rng.index(pool.size())];
  }
  return out;
}

Revision revise(const Question& question, const AgentProfile& agent,
                const DeliberationRecord& record, const Feedback& supporting_feedback,
                const std::optional<std::pair<Argument, Feedback>>& opposing,
                std::string_view opposing_answer, RevisionCounts counts, const AgentContext& ctx) {
  const std::string none(kNoDissent);
  const std::string prior = text::format_decimal(record.prior_confidence, 2);
  VariableMap vars{{"QUERY", question.text},
                   {"STANCE", record.prior_answer},
                   {"ORIGINAL-CONFIDENCE", prior},
                   {"ARGUMENT-AGAINST", opposing ? opposing->first.text : none},
                   {"FEEDBACK-AGAINST", opposing ? opposing->second.summarized : none},
                   {"NUMBER-AGAINST", std::to_string(counts.against)},
                   {"ARGUMENT-FOR", record.supporting_argument.text},
                   {"FEEDBACK-SUPPORTING", supporting_feedback.summarized},
                   {"NUMBER-SUPPORTING", std::to_string(counts.supporting)}};
  try {
    auto req = tagged_request(agent, question, to_string(CallKind::kRevise),
                              ctx.prompts->render(templates::kConfidenceRationale, vars),
                              ctx.calls.deliberation_temperature, ctx.calls.max_tokens);
    auto& h = req.context;
    h[hint_key(sim_hints::kStance)] = record.prior_answer;
    h[hint_key(sim_hints::kSupportQuality)] = text::format_decimal(supporting_feedback.quality, 6);
    h[hint_key(sim_hints::kSupportFlagged)] = supporting_feedback.factuality_notes.empty() ? "0" : "1";
    h[hint_key(sim_hints::kNumberSupporting)] = std::to_string(counts.supporting);
    h[hint_key(sim_hints::kNumberAgainst)] = std::to_string(counts.against);
    if (opposing) {
      h[hint_key(sim_hints::kOpposingAnswer)] = std::string(opposing_answer);
      h[hint_key(sim_hints::kOpposeQuality)] = text::format_decimal(opposing->second.quality, 6);
      h[hint_key(sim_hints::kOpposeFlagged)] = opposing->second.factuality_notes.empty() ? "0" : "1";
    }
    if (auto parsed = parse_revision(complete(req, *agent.backbone.provider).text)) {
      return {parsed->answer, parsed->rationale};
    }
    spdlog::warn("unparseable revision from {} on {}", agent.agent_id, question.id);
  } catch (const std::exception& e) {
    spdlog::warn("revision call failed for {} on {}: {}", agent.agent_id, question.id, e.what());
  }
  return {record.prior_answer, std::string(kRevisionFailed)};
}

double posterior_confidence(const Question& question, const AgentProfile& agent,
                            const DeliberationRecord& record, const AgentContext& ctx) {
  const std::string prior = text::format_decimal(record.prior_confidence, 2);
  try {
    auto req = tagged_request(agent, question, to_string(CallKind::kPosterior),
                              ctx.prompts->render(templates::kFinalConfidence,
                                                  {{"ORIGINAL-CONFIDENCE", prior},
                                                   {"CONFIDENCE-RATIONALE", record.confidence_rationale}}),
                              ctx.calls.deliberation_temperature, ctx.calls.max_tokens);
    req.context[hint_key(sim_hints::kOriginalConfidence)] = prior;
    req.context[hint_key(sim_hints::kRationale)] = record.confidence_rationale;
    if (auto c = parse_confidence(complete(req, *agent.backbone.provider).text)) return *c;
    spdlog::warn("unparseable posterior confidence from {} on {}", agent.agent_id, question.id);
  } catch (const std::exception& e) {
    spdlog::warn("posterior call failed for {} on {}: {}", agent.agent_id, question.id, e.what());
  }
  return record.prior_confidence;
}

FinalVerdict final_verdict(const Question& question, std::span<const DeliberationRecord> records,
                           const EquivalenceJudge& judge) {
  if (records.empty()) throw Error("final verdict over zero records");
  std::vector<std::string> answers;
  for (const auto& r : records) answers.push_back(r.revised_answer);
  const auto labels = partition_answers(question, answers, judge);
  const std::size_t classes = *std::max_element(labels.begin(), labels.end()) + 1;

  struct Cluster {
    std::vector<std::size_t> members;
    std::string representative;
    double mean = 0.0;
  };
  std::vector<Cluster> clusters(classes);
  for (std::size_t i = 0; i < records.size(); ++i) clusters[labels[i]].members.push_back(i);
  for (auto& c : clusters) {
    std::vector<double> posts;
    const DeliberationRecord* best = nullptr;
    for (auto i : c.members) {
      const auto& r = records[i];
      posts.push_back(r.posterior_confidence);
      if (best == nullptr || r.posterior_confidence > best->posterior_confidence ||
          (r.posterior_confidence == best->posterior_confidence && r.revised_answer < best->revised_answer)) {
        best = &r;
      }
    }
    c.mean = sorted_mean(std::move(posts));
    c.representative = best->revised_answer;
  }
  const auto winner = std::min_element(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
    if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
    if (a.mean != b.mean) return a.mean > b.mean;
    return a.representative < b.representative;
  });

  FinalVerdict v;
  v.final_answer = winner->representative;
  v.final_confidence = winner->mean;
  for (const auto& c : clusters) v.vote_counts[c.representative] = static_cast<int>(c.members.size());
  for (auto i : winner->members) v.supporting_records.push_back(records[i].agent_id);
  std::vector<double> all;
  for (const auto& r : records) all.push_back(r.posterior_confidence);
  v.mean_confidence_all = sorted_mean(std::move(all));
  return v;
}

DeliberationOutcome deliberate(const Question& question, std::span<const Stance> stances,
                               std::span<const AgentProfile> deliberators, std::size_t k,
                               const AgentProfile* verifier, const EquivalenceJudge& judge,
                               const AgentContext& ctx) {
  for (const auto& d : deliberators) {
    if (d.role != AgentRole::kDeliberator || !d.valid()) {
      throw ConfigError("agent " + d.agent_id + " is not a valid deliberator");
    }
  }
  DeliberationOutcome out;
  out.assignment = assign_stances(stances, deliberators);
  out.arguments = generate_arguments(question, stances, out.assignment, deliberators, ctx);
  out.feedback = rate_arguments(question, out.arguments, stances, deliberators, k, verifier, ctx);

  std::map<int, int> stance_size;
  for (const auto& [_, s] : out.assignment) ++stance_size[s];
  const int n = static_cast<int>(out.assignment.size());

  out.records.resize(out.assignment.size());
  std::vector<const AgentProfile*> agents(out.assignment.size());
  for (std::size_t i = 0; i < out.assignment.size(); ++i) {
    const auto& [agent_id, stance_id] = out.assignment[i];
    agents[i] = &*std::find_if(deliberators.begin(), deliberators.end(),
                               [&](const AgentProfile& a) { return a.agent_id == agent_id; });
    const auto& stance = stance_by_id(stances, stance_id);
    auto& rec = out.records[i];
    rec.agent_id = agent_id;
    rec.assigned_stance_id = stance_id;
    rec.prior_answer = stance.representative_answer;
    rec.prior_confidence = stance.mean_confidence;
  }

  parallel_for(
      out.records.size(),
      [&](std::size_t i) {
        auto& rec = out.records[i];
        HashStream rng(hash_parts(ctx.seed, {question.id, "pairing", rec.agent_id}));
        const auto pairing = pair_arguments(rec.assigned_stance_id, out.arguments, rng);
        rec.supporting_argument = out.arguments[pairing.supporting];
        std::optional<std::pair<Argument, Feedback>> opposing;
        std::string opposing_answer;
        if (pairing.opposing) {
          rec.opposing_argument = out.arguments[*pairing.opposing];
          opposing.emplace(out.arguments[*pairing.opposing], out.feedback[*pairing.opposing]);
          opposing_answer = stance_by_id(stances, rec.opposing_argument->stance_id).representative_answer;
        }
        RevisionCounts counts{stance_size[rec.assigned_stance_id] - 1, n - stance_size[rec.assigned_stance_id]};
        auto revision = revise(question, *agents[i], rec, out.feedback[pairing.supporting], opposing,
                               opposing_answer, counts, ctx);
        rec.revised_answer = std::move(revision.answer);
        rec.confidence_rationale = std::move(revision.rationale);
      },
      ctx.calls.fanout);

  parallel_for(
      out.records.size(),
      [&](std::size_t i) {
        out.records[i].posterior_confidence = posterior_confidence(question, *agents[i], out.records[i], ctx);
      },
      ctx.calls.fanout);

  out.verdict = final_verdict(question, out.records, judge);
  return out;
}

}  // namespace collabcal
