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

#include "collabcal/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include <spdlog/spdlog.h>

#include "collabcal/errors.hpp"
#include "collabcal/http_provider.hpp"
#include "collabcal/parallel.hpp"
#include "collabcal/simulated_provider.hpp"

namespace collabcal {

using nlohmann::json;

namespace {

ProviderHandle make_provider(const RunConfig& config, const BackboneConfig& bb,
                             const std::shared_ptr<const SimWorld>& world) {
  if (config.backend == BackendMode::kHttp) {
    HttpProviderOptions opt;
    opt.endpoint = bb.endpoint;
    opt.model_id = bb.model;
    opt.api_key_env = bb.api_key_env;
    opt.logprobs = bb.logprobs;
    opt.requests_per_minute = bb.requests_per_minute;
    opt.retry.max_attempts = bb.max_attempts;
    opt.retry.initial_backoff = std::chrono::milliseconds(bb.initial_backoff_ms);
    opt.timeout = std::chrono::seconds(bb.timeout_s);
    return std::make_shared<HttpProvider>(std::move(opt));
  }
  SimulatedProviderOptions opt;
  opt.seed = config.seed;
  opt.backbone = bb.name;
  opt.policy = config.sim.policy;
  opt.defaults = config.sim.defaults;
  opt.by_skill = config.sim.by_skill;
  opt.token_probs = bb.token_probs;
  return std::make_shared<SimulatedProvider>(std::move(opt), world);
}

std::unique_ptr<SearchProvider> make_search(const RunConfig& config,
                                            const std::vector<DatasetRecord>& dataset) {
  switch (config.search) {
    case SearchMode::kNone:
      return nullptr;
    case SearchMode::kReferenceStub: {
      // Knowledge base that states each question's reference answer.
      auto stub = std::make_unique<LocalSearchStub>();
      for (const auto& r : dataset) {
        std::vector<SearchResult> results;
        for (const auto& ref : r.reference_answers) {
          results.push_back({"Reference", "The answer to the question is " + ref + "."});
        }
        stub->add(r.id, std::move(results));
      }
      return stub;
    }
    case SearchMode::kFile:
      return std::make_unique<LocalSearchStub>(LocalSearchStub::from_jsonl(config.search_file));
    case SearchMode::kHttp:
      return std::make_unique<HttpSearchProvider>(config.search_endpoint, config.search_max_results);
  }
  return nullptr;
}

const Backbone& find_backbone(const std::vector<Backbone>& backbones, const std::string& name) {
  for (const auto& b : backbones) {
    if (b.name == name) return b;
  }
  throw ConfigError("unknown backbone '" + name + "'");
}

PredictionRow prediction(const Question& q, const std::string& answer, double confidence,
                         const EquivalenceJudge& judge) {
  return {q.id, answer, confidence, judge.matches_reference(q, answer)};
}

}  // namespace

Engine::Engine(const RunConfig& config, const std::vector<DatasetRecord>& dataset) : config_(config) {
  config_.validate();
  prompts_ = config_.prompts_dir.empty() ? PromptRegistry::builtin()
                                         : PromptRegistry::from_directory(config_.prompts_dir);
  search_ = make_search(config_, dataset);

  std::shared_ptr<const SimWorld> world;
  if (config_.backend == BackendMode::kSimulated) {
    auto w = std::make_shared<SimWorld>();
    for (const auto& r : dataset) {
      w->add(r.id, r.reference_answers, r.distractors(), config_.sim.policy.distractor_count);
    }
    world = std::move(w);
  }
  for (const auto& bb : config_.backbones) {
    backbones_.push_back({bb.name, bb.model.empty() ? bb.name : bb.model, make_provider(config_, bb, world)});
  }

  ctx_.prompts = &prompts_;
  ctx_.search = search_.get();
  ctx_.seed = config_.seed;
  ctx_.calls.stance_temperature = config_.stance_temperature;
  ctx_.calls.judge_temperature = config_.judge_temperature;
  ctx_.calls.deliberation_temperature = config_.deliberation_temperature;
  ctx_.calls.max_tokens = config_.max_tokens;
  ctx_.calls.fanout = config_.fanout;

  judge_ = config_.llm_judge()
               ? EquivalenceJudge::llm(find_backbone(backbones_, config_.judge_model().name), &prompts_, ctx_.calls)
               : EquivalenceJudge::exact_match();

  const auto& delib = find_backbone(backbones_, config_.deliberator().name);
  for (std::size_t i = 1; i <= config_.deliberator_count(); ++i) {
    deliberators_.push_back({delib.name + "/general/d" + std::to_string(i), delib, Skill::kGeneral,
                             AgentRole::kDeliberator});
  }
  if (search_) {
    verifier_ = AgentProfile{"verifier", find_backbone(backbones_, config_.verifier().name),
                             Skill::kGeneral, AgentRole::kDeliberator};
  }
}

std::vector<BackboneSelection> Engine::select(const std::vector<DatasetRecord>& dataset) const {
  if (!config_.selection) {
    return uniform_selection(config_.skills, backbones_, config_.ensemble_size, config_.tau);
  }
  std::vector<Question> validation;
  for (const auto& r : dataset) {
    if (r.split == Split::kValidation) validation.push_back(r.as_question());
  }
  if (validation.empty()) {
    throw ConfigError("agent selection needs validation records (or set selection = false)");
  }
  std::size_t m = config_.validation_m;
  if (m > validation.size()) {
    spdlog::warn("validation_m={} exceeds the {} validation records; using all of them", m,
                 validation.size());
    m = validation.size();
  }
  return select_agents(validation, config_.skills, backbones_, m, config_.tau, config_.ensemble_size,
                       *judge_, ctx_);
}

QuestionTranscript Engine::run_question(const Question& question,
                                        std::span<const AgentProfile> experts) const {
  QuestionTranscript t;
  t.question = question;
  try {
    t.stage1 = collect_stage1(question, experts, ctx_);
    t.stances = cluster_stances(question, t.stage1, *judge_);
    const auto& top = t.stances->stances.front();
    t.pre = prediction(question, top.representative_answer, top.mean_confidence, *judge_);

    t.deliberation = deliberate(question, t.stances->stances, deliberators_,
                                config_.feedback_per_argument, verifier(), *judge_, ctx_);
    const auto& v = t.deliberation->verdict;
    t.post = prediction(question, v.final_answer, v.final_confidence, *judge_);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    spdlog::warn("question {} failed: {}", question.id, e.what());
    t.status = QuestionStatus::kFailed;
    t.error = e.what();
    t.pre.reset();
    t.post.reset();
  }
  return t;
}

std::vector<BackboneSelection> uniform_selection(std::span<const Skill> skills,
                                                 std::span<const Backbone> backbones,
                                                 std::size_t total_slots, double tau) {
  const auto shares = backbone_shares(total_slots, backbones.size());
  std::vector<BackboneSelection> out;
  for (std::size_t b = 0; b < backbones.size(); ++b) {
    if (shares[b] == 0) continue;
    SelectionResult r;
    r.tau = tau;
    r.total_slots = shares[b];
    for (std::size_t i = 0; i < skills.size(); ++i) {
      const std::size_t slots = shares[b] / skills.size() + (i < shares[b] % skills.size() ? 1 : 0);
      r.slots.emplace_back(std::string(to_string(skills[i])), slots);
    }
    out.push_back({backbones[b].name, std::move(r)});
  }
  return out;
}

json selection_json(const std::vector<BackboneSelection>& selection) {
  json out = json::array();
  for (const auto& s : selection) {
    json all = json::object(), surviving = json::object(), slots = json::object();
    for (const auto& [k, v] : s.result.all_scores) all[k] = v;
    for (const auto& [k, v] : s.result.surviving_scores) surviving[k] = v;
    for (const auto& [k, v] : s.result.slots) slots[k] = v;
    out.push_back({{"backbone", s.backbone},
                   {"tau", s.result.tau},
                   {"m", s.result.m},
                   {"total_slots", s.result.total_slots},
                   {"fallback", s.result.fallback},
                   {"scores", std::move(all)},
                   {"surviving", std::move(surviving)},
                   {"slots", std::move(slots)}});
  }
  return out;
}

RunResult run_pipeline(const RunConfig& config, const std::vector<DatasetRecord>& dataset) {
  Engine engine(config, dataset);
  RunResult result;
  result.selection = engine.select(dataset);
  const auto experts = build_expert_agents(result.selection, engine.backbones());
  spdlog::info("ensemble of {} experts, {} deliberators", experts.size(), engine.deliberators().size());

  std::vector<Question> questions;
  for (const auto& r : dataset) {
    if (r.split == Split::kTest) questions.push_back(r.as_question());
  }
  std::sort(questions.begin(), questions.end(),
            [](const Question& a, const Question& b) { return a.id < b.id; });

  result.transcripts.resize(questions.size());
  parallel_for(
      questions.size(),
      [&](std::size_t i) { result.transcripts[i] = engine.run_question(questions[i], experts); },
      config.parallelism);

  std::vector<metrics::Prediction> pre, post;
  std::size_t failures = 0;
  for (const auto& t : result.transcripts) {
    if (t.status == QuestionStatus::kFailed) {
      ++failures;
      continue;
    }
    pre.push_back(as_prediction(*t.pre));
    post.push_back(as_prediction(*t.post));
  }
  result.pre = metrics::calibration_report(std::move(pre), failures, config.bins);
  result.post = metrics::calibration_report(std::move(post), failures, config.bins);
  return result;
}

namespace {

json report_json(const metrics::CalibrationReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json bins = json::array();
  for (const auto& b : r.bins.bins) {
    bins.push_back({{"lo", b.lo},
                    {"hi", b.hi},
                    {"count", b.count},
                    {"mean_confidence", opt(b.mean_confidence)},
                    {"accuracy", opt(b.accuracy)}});
  }
  return {{"n", r.n},
          {"failures", r.failures},
          {"accuracy", opt(r.accuracy)},
          {"ece_abs", opt(r.ece_abs)},
          {"ece_sq", opt(r.ece_sq)},
          {"brier", opt(r.brier)},
          {"reliability", std::move(bins)}};
}

}  // namespace

std::string metrics_json(const metrics::CalibrationReport& pre,
                         const metrics::CalibrationReport& post, std::size_t bins) {
  json j = {{"bins", bins}, {"pre", report_json(pre)}, {"post", report_json(post)}};
  return j.dump(2) + "\n";
}

std::string predictions_jsonl(const std::vector<QuestionTranscript>& transcripts, bool post) {
  std::vector<const PredictionRow*> rows;
  for (const auto& t : transcripts) {
    const auto& row = post ? t.post : t.pre;
    if (t.status == QuestionStatus::kCompleted && row) rows.push_back(&*row);
  }
  std::sort(rows.begin(), rows.end(), [](const PredictionRow* a, const PredictionRow* b) { return a->id < b->id; });
  std::string out;
  for (const auto* r : rows) out += to_json(*r).dump() + "\n";
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << contents;
  if (!out) throw Error("write failed for " + path.string());
}

void write_run(const std::filesystem::path& out_dir, const RunResult& result, std::size_t bins) {
  namespace fs = std::filesystem;
  const auto transcripts = out_dir / "transcripts";
  fs::create_directories(transcripts);
  for (const auto& t : result.transcripts) {
    write_file(transcripts / (transcript_stem(t.question.id) + ".json"), to_json(t).dump(2) + "\n");
  }
  write_file(out_dir / "selection.json", selection_json(result.selection).dump(2) + "\n");
  write_file(out_dir / "predictions_pre.jsonl", predictions_jsonl(result.transcripts, false));
  write_file(out_dir / "predictions_post.jsonl", predictions_jsonl(result.transcripts, true));
  write_file(out_dir / "metrics.json", metrics_json(result.pre, result.post, bins));
  write_file(out_dir / "reliability_pre.csv", metrics::reliability_csv(result.pre.bins));
  write_file(out_dir / "reliability_post.csv", metrics::reliability_csv(result.post.bins));
}

}  // namespace collabcal
