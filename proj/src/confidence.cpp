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

#include "collabcal/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "collabcal/errors.hpp"

namespace collabcal {

std::string_view to_string(ConfidenceSource source) {
  return source == ConfidenceSource::kLogit ? "logit" : "verbalized";
}

RawConfidence perplexity_confidence(std::span<const double> token_probs) {
  if (token_probs.empty()) throw EmptySequence("perplexity of an empty token sequence");
  double log_sum = 0.0;
  for (double p : token_probs) {
    if (!(p > 0.0 && p <= 1.0)) {
      throw OutOfRangeProb("token probability outside (0, 1]: " + std::to_string(p));
    }
    log_sum += std::log(p);
  }
  return {std::exp(log_sum / static_cast<double>(token_probs.size())), ConfidenceSource::kLogit};
}

RawConfidence verbalized_confidence(double value) {
  return {std::isnan(value) ? 0.0 : std::clamp(value, 0.0, 1.0), ConfidenceSource::kVerbalized};
}

double calibration_score(const ValidationCell& cell) {
  if (cell.abstained()) return 0.0;
  return (cell.is_correct ? 1.0 : -1.0) * cell.confidence.value;
}

double mean_calibration_score(std::span<const ValidationCell> cells) {
  if (cells.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : cells) sum += calibration_score(c);
  return sum / static_cast<double>(cells.size());
}

std::optional<double> aggregate_and_filter(std::span<const ValidationCell> cells, double tau) {
  double mean = mean_calibration_score(cells);
  if (mean >= tau) return mean;
  return std::nullopt;
}

SlotAllocation allocate_slots(const TypeScores& surviving, std::size_t total_slots) {
  if (surviving.empty()) throw NoSurvivors("no agent type survived the calibration filter");
  if (total_slots == 0) throw ConfigError("slot count must be at least 1");

  double max_score = surviving.front().second;
  for (const auto& [_, s] : surviving) max_score = std::max(max_score, s);
  std::vector<double> weights;
  weights.reserve(surviving.size());
  for (const auto& [_, s] : surviving) weights.push_back(std::exp(s - max_score));
  const double z = std::accumulate(weights.begin(), weights.end(), 0.0);

  SlotAllocation out;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < surviving.size(); ++i) {
    auto slots = static_cast<std::size_t>(std::floor(static_cast<double>(total_slots) * weights[i] / z));
    out.emplace_back(surviving[i].first, slots);
    assigned += slots;
  }

  std::vector<std::size_t> order(surviving.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return surviving[a].second > surviving[b].second;
  });
  for (std::size_t k = 0; assigned < total_slots; ++k, ++assigned) {
    ++out[order[k % order.size()]].second;
  }
  return out;
}

SelectionResult select_from_scores(const TypeScores& mean_scores, double tau, std::size_t total_slots,
                                   std::size_t m) {
  SelectionResult result;
  result.all_scores = mean_scores;
  result.tau = tau;
  result.m = m;
  result.total_slots = total_slots;
  for (const auto& entry : mean_scores) {
    if (entry.second >= tau) result.surviving_scores.push_back(entry);
  }

  SlotAllocation granted;
  if (result.surviving_scores.empty()) {
    if (mean_scores.empty()) throw NoSurvivors("no candidate agent types");
    auto best = mean_scores.begin();
    for (auto it = mean_scores.begin(); it != mean_scores.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    spdlog::warn("every agent type scored below tau={}; giving all {} slots to '{}'", tau,
                 total_slots, best->first);
    granted = {{best->first, total_slots}};
    result.fallback = true;
  } else {
    granted = allocate_slots(result.surviving_scores, total_slots);
  }

  for (const auto& [type, _] : mean_scores) {
    auto it = std::find_if(granted.begin(), granted.end(), [&](const auto& g) { return g.first == type; });
    result.slots.emplace_back(type, it == granted.end() ? 0 : it->second);
  }
  return result;
}

}  // namespace collabcal
