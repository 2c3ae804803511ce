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

#include <optional>
#include <string>
#include <vector>

#include "collabcal/deliberation.hpp"
#include "collabcal/ensemble.hpp"
#include "collabcal/metrics.hpp"
#include "json.hpp"

namespace collabcal {

struct PredictionRow {
  std::string id;
  std::string answer;
  double confidence = 0.0;
  bool correct = false;
};

enum class QuestionStatus { kCompleted, kFailed };

struct QuestionTranscript {
  Question question;
  QuestionStatus status = QuestionStatus::kCompleted;
  std::string error;
  std::vector<Stage1Record> stage1;
  std::optional<StanceSet> stances;
  std::optional<DeliberationOutcome> deliberation;
  // Top Stage-1 stance and the deliberated verdict; both set when completed.
  std::optional<PredictionRow> pre;
  std::optional<PredictionRow> post;
};

nlohmann::json to_json(const PredictionRow& row);
PredictionRow prediction_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QuestionTranscript& transcript);

// Reads back only what the report needs: status and the two predictions.
QuestionTranscript transcript_summary_from_json(const nlohmann::json& j);

// File-system safe stem for a question id. Ids that need rewriting get a
// hash suffix so distinct ids never collide.
std::string transcript_stem(const std::string& question_id);

metrics::Prediction as_prediction(const PredictionRow& row);

}  // namespace collabcal
