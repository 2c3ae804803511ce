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

#include "collabcal/transcript.hpp"

#include <cstdio>

#include "collabcal/errors.hpp"
#include "collabcal/hashing.hpp"

namespace collabcal {

using nlohmann::json;

namespace {

json rating_json(const ParsedRating& r) {
  json j = {{"consistency", to_string(r.consistency)},
            {"clarity", to_string(r.clarity)},
            {"conciseness", to_string(r.conciseness)}};
  if (r.factuality_notes) j["factuality"] = *r.factuality_notes;
  return j;
}

json argument_json(const Argument& a) {
  json j = {{"author_id", a.author_id}, {"stance_id", a.stance_id}, {"text", a.text}};
  if (a.placeholder) j["placeholder"] = true;
  return j;
}

json stage1_json(const Stage1Record& r) {
  json j = {{"agent_id", r.agent_id},
            {"backbone", r.backbone},
            {"skill", to_string(r.skill)},
            {"abstained", r.abstained()},
            {"raw_text", r.raw_text}};
  if (!r.stance.abstained) j["answer"] = r.stance.answer;
  if (r.stance.confidence) j["verbalized_confidence"] = *r.stance.confidence;
  if (r.confidence) {
    j["confidence"] = r.confidence->value;
    j["confidence_source"] = to_string(r.confidence->source);
  }
  if (r.stance.aux_ratings) {
    j["aux_ratings"] = {{"ambiguity", r.stance.aux_ratings->ambiguity},
                        {"complexity", r.stance.aux_ratings->complexity},
                        {"ability", r.stance.aux_ratings->ability}};
  }
  if (r.error) j["error"] = *r.error;
  return j;
}

json stance_json(const Stance& s) {
  return {{"stance_id", s.stance_id},
          {"representative_answer", s.representative_answer},
          {"member_answers", s.member_answers},
          {"frequency", s.frequency},
          {"mean_confidence", s.mean_confidence},
          {"supporters", s.supporters}};
}

json deliberation_json(const DeliberationOutcome& d) {
  json assignment = json::array();
  for (const auto& [agent, stance] : d.assignment) assignment.push_back({{"agent_id", agent}, {"stance_id", stance}});

  json arguments = json::array();
  for (const auto& a : d.arguments) arguments.push_back(argument_json(a));

  json feedback = json::array();
  for (const auto& f : d.feedback) {
    json ratings = json::array();
    for (const auto& r : f.ratings) {
      auto rj = rating_json(r.rating);
      rj["rater_id"] = r.rater_id;
      if (r.substituted) rj["substituted"] = true;
      ratings.push_back(std::move(rj));
    }
    feedback.push_back({{"author_id", f.author_id},
                        {"stance_id", f.stance_id},
                        {"ratings", std::move(ratings)},
                        {"factuality_notes", f.factuality_notes},
                        {"summarized", f.summarized},
                        {"quality", f.quality}});
  }

  json records = json::array();
  for (const auto& r : d.records) {
    json rj = {{"agent_id", r.agent_id},
               {"assigned_stance_id", r.assigned_stance_id},
               {"prior_answer", r.prior_answer},
               {"prior_confidence", r.prior_confidence},
               {"supporting_argument", argument_json(r.supporting_argument)},
               {"revised_answer", r.revised_answer},
               {"confidence_rationale", r.confidence_rationale},
               {"posterior_confidence", r.posterior_confidence}};
    rj["opposing_argument"] = r.opposing_argument ? argument_json(*r.opposing_argument) : json(nullptr);
    records.push_back(std::move(rj));
  }

  const auto& v = d.verdict;
  json verdict = {{"final_answer", v.final_answer},
                  {"final_confidence", v.final_confidence},
                  {"mean_confidence_all", v.mean_confidence_all},
                  {"vote_counts", v.vote_counts},
                  {"supporting_records", v.supporting_records}};

  return {{"assignment", std::move(assignment)},
          {"arguments", std::move(arguments)},
          {"feedback", std::move(feedback)},
          {"records", std::move(records)},
          {"verdict", std::move(verdict)}};
}

}  // namespace

json to_json(const PredictionRow& row) {
  return {{"id", row.id}, {"answer", row.answer}, {"confidence", row.confidence}, {"correct", row.correct}};
}

PredictionRow prediction_from_json(const json& j) {
  PredictionRow row;
  row.id = j.at("id").get<std::string>();
  row.answer = j.at("answer").get<std::string>();
  row.confidence = j.at("confidence").get<double>();
  row.correct = j.at("correct").get<bool>();
  return row;
}

json to_json(const QuestionTranscript& t) {
  json j = {{"question_id", t.question.id},
            {"question", t.question.text},
            {"reference_answers", t.question.references},
            {"status", t.status == QuestionStatus::kCompleted ? "completed" : "failed"}};
  if (!t.error.empty()) j["error"] = t.error;
  json stage1 = json::array();
  for (const auto& r : t.stage1) stage1.push_back(stage1_json(r));
  j["stage1"] = std::move(stage1);
  if (t.stances) {
    json stances = json::array();
    for (const auto& s : t.stances->stances) stances.push_back(stance_json(s));
    j["stances"] = std::move(stances);
    j["abstentions"] = t.stances->abstentions;
  }
  if (t.deliberation) j["deliberation"] = deliberation_json(*t.deliberation);
  j["pre"] = t.pre ? to_json(*t.pre) : json(nullptr);
  j["post"] = t.post ? to_json(*t.post) : json(nullptr);
  return j;
}

QuestionTranscript transcript_summary_from_json(const json& j) {
  QuestionTranscript t;
  try {
    t.question.id = j.at("question_id").get<std::string>();
    const auto status = j.at("status").get<std::string>();
    if (status == "completed") {
      t.status = QuestionStatus::kCompleted;
    } else if (status == "failed") {
      t.status = QuestionStatus::kFailed;
    } else {
      throw Error("unknown status '" + status + "'");
    }
    if (auto e = j.find("error"); e != j.end()) t.error = e->get<std::string>();
    if (t.status == QuestionStatus::kCompleted) {
      t.pre = prediction_from_json(j.at("pre"));
      t.post = prediction_from_json(j.at("post"));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed transcript: ") + e.what());
  }
  return t;
}

std::string transcript_stem(const std::string& question_id) {
  std::string out;
  bool changed = question_id.empty();
  for (char c : question_id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
    changed = changed || !ok;
  }
  if (out.empty()) {
    out = "_";
  } else if (out.front() == '.') {
    out.front() = '_';
    changed = true;
  }
  if (changed) {
    char suffix[24];
    std::snprintf(suffix, sizeof suffix, "-%016llx",
                  static_cast<unsigned long long>(fnv1a64(question_id)));
    out += suffix;
  }
  return out;
}

metrics::Prediction as_prediction(const PredictionRow& row) {
  return {row.id, row.confidence, row.correct};
}

}  // namespace collabcal
