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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "collabcal/ensemble.hpp"
#include "collabcal/hashing.hpp"
#include "collabcal/prompts.hpp"

namespace collabcal {

inline constexpr std::string_view kNoArgument = "(no argument provided)";
inline constexpr std::string_view kNoDissent = "none (no dissenting stance)";
inline constexpr std::string_view kRevisionFailed = "(revision failed; retaining prior)";

struct Argument {
  std::string author_id;
  int stance_id = 0;
  std::string text;
  // True for the stand-in used when generation failed.
  bool placeholder = false;
};

struct RaterScore {
  std::string rater_id;
  ParsedRating rating;
  // The reply was malformed and the neutral rating was substituted.
  bool substituted = false;
};

struct Feedback {
  std::string author_id;
  int stance_id = 0;
  std::vector<RaterScore> ratings;
  std::string factuality_notes;
  std::string summarized;
  // Mean rating value in [0, 1], halved when factuality notes flag an issue.
  double quality = 0.0;
};

struct DeliberationRecord {
  std::string agent_id;
  int assigned_stance_id = 0;
  std::string prior_answer;
  double prior_confidence = 0.0;
  Argument supporting_argument;
  std::optional<Argument> opposing_argument;
  std::string revised_answer;
  std::string confidence_rationale;
  double posterior_confidence = 0.0;
};

struct FinalVerdict {
  std::string final_answer;
  double final_confidence = 0.0;
  // Mean posterior over every deliberator, kept for analysis.
  double mean_confidence_all = 0.0;
  std::map<std::string, int> vote_counts;
  std::vector<std::string> supporting_records;
};

// agent_id -> stance_id, in deliberator order.
using StanceAssignment = std::vector<std::pair<std::string, int>>;

// Largest-remainder apportionment of deliberators to stances by frequency.
// Deliberators are handed out in order: the first ones to stance 0, etc.
StanceAssignment assign_stances(std::span<const Stance> stances,
                                std::span<const AgentProfile> deliberators);

// Per-stance deliberator counts of an apportionment (exposed for tests).
std::vector<std::size_t> apportion(std::span<const int> frequencies, std::size_t seats);

std::vector<Argument> generate_arguments(const Question& question, std::span<const Stance> stances,
                                         const StanceAssignment& assignment,
                                         std::span<const AgentProfile> deliberators,
                                         const AgentContext& ctx);

// Premise check of one argument. Returns quoted contradicted premises, or ""
// when nothing is flagged or the verifier is unavailable.
std::string verify_factuality(const Question& question, const Argument& argument,
                              std::string_view stance_answer, const AgentProfile* verifier,
                              const AgentContext& ctx);

struct RatingPlan {
  std::size_t k = 0;
  // raters[i] = deliberator indices rating argument i.
  std::vector<std::vector<std::size_t>> raters;
};

// Round-robin over a seeded shuffle of the deliberators; nobody rates their
// own argument. k is reduced when fewer than k + 1 deliberators exist.
RatingPlan plan_ratings(const Question& question, std::span<const Argument> arguments,
                        std::span<const AgentProfile> deliberators, std::size_t k,
                        std::uint64_t seed);

std::vector<Feedback> rate_arguments(const Question& question, std::span<const Argument> arguments,
                                     std::span<const Stance> stances,
                                     std::span<const AgentProfile> deliberators, std::size_t k,
                                     const AgentProfile* verifier, const AgentContext& ctx);

std::string summarize_feedback(const std::vector<RaterScore>& ratings, const std::string& notes);
double feedback_quality(const std::vector<RaterScore>& ratings, const std::string& notes);

struct Pairing {
  std::size_t supporting = 0;
  std::optional<std::size_t> opposing;
};

// Indices into `arguments`. Supporting is uniform over the agent's own
// stance; opposing picks a different stance uniformly, then an argument in it.
Pairing pair_arguments(int own_stance, std::span<const Argument> arguments, HashStream& rng);

struct RevisionCounts {
  int supporting = 0;  // same-stance deliberators other than the agent
  int against = 0;     // deliberators on other stances
};

struct Revision {
  std::string answer;
  std::string rationale;
};

Revision revise(const Question& question, const AgentProfile& agent,
                const DeliberationRecord& record, const Feedback& supporting_feedback,
                const std::optional<std::pair<Argument, Feedback>>& opposing,
                std::string_view opposing_answer, RevisionCounts counts, const AgentContext& ctx);

double posterior_confidence(const Question& question, const AgentProfile& agent,
                            const DeliberationRecord& record, const AgentContext& ctx);

// Majority over re-clustered revised answers; ties go to the higher mean
// posterior, then the lexicographically smaller representative.
FinalVerdict final_verdict(const Question& question, std::span<const DeliberationRecord> records,
                           const EquivalenceJudge& judge);

struct DeliberationOutcome {
  StanceAssignment assignment;
  std::vector<Argument> arguments;
  std::vector<Feedback> feedback;
  std::vector<DeliberationRecord> records;
  FinalVerdict verdict;
};

// Runs every phase with a barrier between phases.
DeliberationOutcome deliberate(const Question& question, std::span<const Stance> stances,
                               std::span<const AgentProfile> deliberators, std::size_t k,
                               const AgentProfile* verifier, const EquivalenceJudge& judge,
                               const AgentContext& ctx);

}  // namespace collabcal
