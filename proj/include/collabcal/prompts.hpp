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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace collabcal {

using VariableMap = std::map<std::string, std::string>;

namespace templates {
inline constexpr std::string_view kStanceGeneration = "stance_generation";
inline constexpr std::string_view kArgumentGeneration = "argument_generation";
inline constexpr std::string_view kArgumentRating = "argument_rating";
inline constexpr std::string_view kConfidenceRationale = "confidence_rationale";
inline constexpr std::string_view kFinalConfidence = "final_confidence";
inline constexpr std::string_view kJudgeEquivalence = "judge_equivalence";
inline constexpr std::string_view kPremiseExtraction = "premise_extraction";
inline constexpr std::string_view kPremiseCheck = "premise_check";
inline constexpr std::string_view kCot = "cot";
inline constexpr std::string_view kPot = "pot";
inline constexpr std::string_view kSelfAsk = "self_ask";
inline constexpr std::string_view kGenRead = "genread";
}  // namespace templates

// A named prompt body with `${NAME}` placeholders.
struct PromptTemplate {
  std::string name;
  std::string body;
  std::set<std::string> required_placeholders;

  static PromptTemplate parse(std::string name, std::string body);

  // Substitutes every placeholder verbatim in a single pass; substituted text
  // is never rescanned. Extra variables are ignored.
  // Throws MissingPlaceholder naming the first absent variable.
  std::string render(const VariableMap& variables) const;
};

// Immutable after construction; safe for concurrent use.
class PromptRegistry {
 public:
  // Templates compiled in from the prompts/ directory of the source tree.
  static PromptRegistry builtin();
  // Loads every *.txt file in `dir` (stem = template name). Templates the
  // directory does not provide fall back to the builtin wording.
  static PromptRegistry from_directory(const std::filesystem::path& dir);

  const PromptTemplate& get(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::vector<std::string> names() const;

  std::string render(std::string_view name, const VariableMap& variables) const {
    return get(name).render(variables);
  }

  void put(PromptTemplate tmpl);

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

// Raw (name, body) pairs embedded at build time.
const std::vector<std::pair<std::string_view, std::string_view>>& builtin_prompt_sources();

std::string render(const PromptRegistry& registry, std::string_view template_name,
                   const VariableMap& variables);

// --- parsing of model replies -------------------------------------------

struct AuxRatings {
  double ambiguity = 0.0;
  double complexity = 0.0;
  double ability = 0.0;
};

struct ParsedStance {
  std::string answer;
  // Absent when abstained or when the reply carried no usable number.
  std::optional<double> confidence;
  bool abstained = true;
  // Captured for the transcript only; never aggregated.
  std::optional<AuxRatings> aux_ratings;
};

// Total: unparseable text yields abstained = true.
ParsedStance parse_stance(std::string_view text);

// Extracts the number after the first "Confidence:" (case-insensitive).
// "85%" maps to 0.85; anything outside [0, 1] afterwards is clamped.
std::optional<double> parse_confidence(std::string_view text);

enum class RatingLevel { kBad, kModest, kGood, kExcellent };

std::string_view to_string(RatingLevel level);
std::optional<RatingLevel> parse_rating_level(std::string_view word);
// bad = 0, modest = 1/3, good = 2/3, excellent = 1.
double rating_value(RatingLevel level);

struct ParsedRating {
  RatingLevel consistency = RatingLevel::kModest;
  RatingLevel clarity = RatingLevel::kModest;
  RatingLevel conciseness = RatingLevel::kModest;
  std::optional<std::string> factuality_notes;

  static ParsedRating neutral() { return {}; }
  static ParsedRating minimum() {
    return {RatingLevel::kBad, RatingLevel::kBad, RatingLevel::kBad, std::nullopt};
  }
  double mean_value() const;
};

// Throws MalformedRating when any of the three aspects is missing.
ParsedRating parse_rating(std::string_view text);

struct ParsedRevision {
  std::string answer;
  std::string rationale;
};

// "Answer: <answer> Rationales: <rationales>"; nullopt when no answer.
std::optional<ParsedRevision> parse_revision(std::string_view text);

struct Premise {
  std::string text;
  bool sure = false;
};

// Lines of the form "Premise: <text> | sure|unsure". Lines without a marker
// count as unsure.
std::vector<Premise> parse_premises(std::string_view text);

enum class PremiseVerdict { kSupported, kContradicted, kUnknown };
PremiseVerdict parse_premise_verdict(std::string_view text);

std::optional<bool> parse_yes_no(std::string_view text);
std::optional<std::string> parse_follow_up(std::string_view text);
// Strips an optional leading "Argument:" label.
std::string parse_argument(std::string_view text);

}  // namespace collabcal
