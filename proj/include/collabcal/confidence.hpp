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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace collabcal {

enum class ConfidenceSource { kLogit, kVerbalized };

std::string_view to_string(ConfidenceSource source);

struct RawConfidence {
  double value = 0.0;
  ConfidenceSource source = ConfidenceSource::kVerbalized;
};

// One validation answer of one candidate agent.
struct ValidationCell {
  std::size_t agent_index = 0;
  std::size_t example_index = 0;
  // Empty when the agent abstained.
  std::optional<std::string> answer;
  RawConfidence confidence;
  bool is_correct = false;

  bool abstained() const { return !answer.has_value(); }
};

// Geometric mean of the token probabilities, exp(mean(log p)).
// Throws EmptySequence / OutOfRangeProb.
RawConfidence perplexity_confidence(std::span<const double> token_probs);

// Clamps a verbalized value into [0, 1].
RawConfidence verbalized_confidence(double value);

// 0 for an abstention, +c when correct, -c when wrong.
double calibration_score(const ValidationCell& cell);

// Mean calibration score over one agent type's cells, kept only if >= tau.
std::optional<double> aggregate_and_filter(std::span<const ValidationCell> cells, double tau);
double mean_calibration_score(std::span<const ValidationCell> cells);

// Scores in registration order; registration order breaks ties.
using TypeScores = std::vector<std::pair<std::string, double>>;
using SlotAllocation = std::vector<std::pair<std::string, std::size_t>>;

// floor(N * softmax(scores)) per type, then one extra slot per type in
// descending score order until the total is exactly N.
// Throws NoSurvivors when `surviving` is empty, ConfigError when N == 0.
SlotAllocation allocate_slots(const TypeScores& surviving, std::size_t total_slots);

struct SelectionResult {
  // Types whose mean score reached tau, with that score.
  TypeScores surviving_scores;
  // Mean score of every candidate type, filtered or not.
  TypeScores all_scores;
  // One entry per candidate type; zero for filtered types.
  SlotAllocation slots;
  double tau = 0.2;
  std::size_t m = 0;
  std::size_t total_slots = 0;
  // True when every type fell below tau and all slots went to the best one.
  bool fallback = false;
};

// Filters by tau and allocates. When nothing survives, every slot goes to the
// type with the highest mean score (first registered on ties) and
// `fallback` is set.
SelectionResult select_from_scores(const TypeScores& mean_scores, double tau, std::size_t total_slots,
                                   std::size_t m);

}  // namespace collabcal
