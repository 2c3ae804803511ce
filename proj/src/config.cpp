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

#include "collabcal/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <tuple>

#include "collabcal/errors.hpp"
#include "collabcal/text.hpp"

namespace collabcal {

namespace {

std::string quoted(std::string_view key) { return "'" + std::string(key) + "'"; }

double to_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(quoted(key) + " expects a number, got '" + std::string(value) + "'");
  }
  return out;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view value) {
  Int out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(quoted(key) + " expects an integer, got '" + std::string(value) + "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view value) {
  const auto v = text::to_lower(value);
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError(quoted(key) + " expects true or false");
}

std::vector<std::string> to_list(std::string_view value) {
  std::vector<std::string> out;
  for (auto& item : text::split(value, ',')) {
    auto t = text::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

bool looks_like_secret(std::string_view field) {
  const auto f = text::to_lower(field);
  if (f == "api_key_env") return false;
  return f == "api_key" || f == "key" || f == "token" || f == "secret" || f == "password" ||
         f.find("api_key") != std::string::npos;
}

BackboneConfig& backbone_entry(RunConfig& config, std::string_view name) {
  for (auto& b : config.backbones) {
    if (b.name == name) return b;
  }
  BackboneConfig b;
  b.name = std::string(name);
  config.backbones.push_back(std::move(b));
  return config.backbones.back();
}

void apply_backbone_field(BackboneConfig& b, std::string_view key, std::string_view field,
                          std::string_view value) {
  if (field == "endpoint") {
    b.endpoint = value;
  } else if (field == "model") {
    b.model = value;
  } else if (field == "api_key_env") {
    b.api_key_env = value;
  } else if (field == "logprobs") {
    b.logprobs = to_bool(key, value);
  } else if (field == "requests_per_minute") {
    b.requests_per_minute = to_double(key, value);
  } else if (field == "max_attempts") {
    b.max_attempts = to_int<int>(key, value);
  } else if (field == "initial_backoff_ms") {
    b.initial_backoff_ms = to_int<int>(key, value);
  } else if (field == "timeout_s") {
    b.timeout_s = to_int<int>(key, value);
  } else if (field == "token_probs") {
    if (value == "none") {
      b.token_probs = TokenProbMode::kNone;
    } else if (value == "confidence") {
      b.token_probs = TokenProbMode::kFromConfidence;
    } else {
      throw ConfigError(quoted(key) + " expects none or confidence");
    }
  } else {
    throw ConfigError("unknown config key " + quoted(key));
  }
}

bool apply_agent_field(SimAgentParams& p, std::string_view key, std::string_view field,
                       std::string_view value) {
  if (field == "accuracy") {
    p.accuracy = to_double(key, value);
  } else if (field == "confidence_bias") {
    p.confidence_bias = to_double(key, value);
  } else if (field == "confidence_noise") {
    p.confidence_noise = to_double(key, value);
  } else if (field == "persuadability") {
    p.persuadability = to_double(key, value);
  } else if (field == "seed_namespace") {
    p.seed_namespace = value;
  } else {
    return false;
  }
  return true;
}

bool apply_policy_field(SimPolicy& p, std::string_view key, std::string_view field,
                        std::string_view value) {
  if (field == "distractor_count") {
    p.distractor_count = to_int<std::size_t>(key, value);
  } else if (field == "distractor_concentration") {
    p.distractor_concentration = to_double(key, value);
  } else if (field == "verifier_recall") {
    p.verifier_recall = to_double(key, value);
  } else if (field == "verifier_false_alarm") {
    p.verifier_false_alarm = to_double(key, value);
  } else if (field == "prior_weight") {
    p.prior_weight = to_double(key, value);
  } else if (field == "agreement_floor") {
    p.agreement_floor = to_double(key, value);
  } else if (field == "posterior_noise") {
    p.posterior_noise = to_double(key, value);
  } else {
    return false;
  }
  return true;
}

void require_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(what) + " must lie in [0, 1]");
}

}  // namespace

std::string_view to_string(BackendMode mode) {
  return mode == BackendMode::kHttp ? "http" : "simulated";
}

std::string_view to_string(SearchMode mode) {
  switch (mode) {
    case SearchMode::kNone:
      return "none";
    case SearchMode::kReferenceStub:
      return "reference_stub";
    case SearchMode::kFile:
      return "file";
    case SearchMode::kHttp:
      return "http";
  }
  return "none";
}

const BackboneConfig& RunConfig::backbone(std::string_view name) const {
  if (backbones.empty()) throw ConfigError("no backbones configured");
  if (name.empty()) return backbones.front();
  for (const auto& b : backbones) {
    if (b.name == name) return b;
  }
  throw ConfigError("unknown backbone '" + std::string(name) + "'");
}

const BackboneConfig& RunConfig::deliberator() const { return backbone(deliberator_backbone); }

const BackboneConfig& RunConfig::verifier() const {
  return backbone(verifier_backbone.empty() ? deliberator_backbone : verifier_backbone);
}

const BackboneConfig& RunConfig::judge_model() const {
  return backbone(judge_backbone.empty() ? deliberator_backbone : judge_backbone);
}

bool RunConfig::llm_judge() const {
  if (judge == JudgeMode::kAuto) return backend == BackendMode::kHttp;
  return judge == JudgeMode::kLlm;
}

void RunConfig::validate() const {
  if (ensemble_size < 1) throw ConfigError("ensemble_size must be at least 1");
  if (feedback_per_argument < 1) throw ConfigError("feedback_per_argument must be at least 1");
  require_unit(tau, "tau");
  if (bins < 1) throw ConfigError("bins must be at least 1");
  if (deliberator_count() < 1) throw ConfigError("deliberators must be at least 1");
  if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
  if (selection && validation_m < 1) throw ConfigError("validation_m must be at least 1");
  if (skills.empty()) throw ConfigError("at least one skill is required");
  if (backbones.empty()) throw ConfigError("no backbones configured");
  if (max_tokens < 1) throw ConfigError("max_tokens must be positive");
  for (const auto& b : backbones) {
    if (backend == BackendMode::kHttp) {
      if (b.endpoint.empty()) throw ConfigError("backbone." + b.name + ".endpoint is required");
      if (b.model.empty()) throw ConfigError("backbone." + b.name + ".model is required");
      if (b.max_attempts < 1) throw ConfigError("backbone." + b.name + ".max_attempts must be >= 1");
    }
  }
  deliberator();
  verifier();
  judge_model();
  if (search == SearchMode::kFile && search_file.empty()) throw ConfigError("search = file needs search.file");
  if (search == SearchMode::kHttp && search_endpoint.empty()) {
    throw ConfigError("search = http needs search.endpoint");
  }
  sim.policy.validate();
  sim.defaults.validate();
  for (const auto& [_, p] : sim.by_skill) p.validate();
}

void apply_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  const auto parts = text::split(key, '.');
  if (looks_like_secret(parts.back())) {
    throw ConfigError("credentials may not appear in config files (" + quoted(key) +
                      "); name an environment variable with api_key_env instead");
  }

  if (parts.size() == 3 && parts[0] == "backbone") {
    apply_backbone_field(backbone_entry(config, parts[1]), key, parts[2], value);
    return;
  }
  if (parts.size() >= 2 && parts[0] == "sim") {
    if (parts.size() == 2) {
      if (apply_agent_field(config.sim.defaults, key, parts[1], value)) return;
      if (apply_policy_field(config.sim.policy, key, parts[1], value)) return;
    } else if (parts.size() == 3) {
      if (!parse_skill(parts[1])) throw ConfigError("unknown skill in " + quoted(key));
      auto skill = std::string(to_string(*parse_skill(parts[1])));
      auto [it, fresh] = config.sim.by_skill.try_emplace(skill, config.sim.defaults);
      if (apply_agent_field(it->second, key, parts[2], value)) return;
      if (fresh) config.sim.by_skill.erase(it);
    }
    throw ConfigError("unknown config key " + quoted(key));
  }

  if (key == "ensemble_size" || key == "N") {
    config.ensemble_size = to_int<std::size_t>(key, value);
  } else if (key == "deliberators") {
    config.deliberators = to_int<std::size_t>(key, value);
  } else if (key == "feedback_per_argument" || key == "k") {
    config.feedback_per_argument = to_int<std::size_t>(key, value);
  } else if (key == "tau") {
    config.tau = to_double(key, value);
  } else if (key == "validation_m") {
    config.validation_m = to_int<std::size_t>(key, value);
  } else if (key == "bins") {
    config.bins = to_int<std::size_t>(key, value);
  } else if (key == "seed") {
    config.seed = to_int<std::uint64_t>(key, value);
  } else if (key == "parallelism") {
    config.parallelism = to_int<int>(key, value);
  } else if (key == "fanout") {
    config.fanout = to_int<int>(key, value);
  } else if (key == "backend") {
    if (value == "simulated") {
      config.backend = BackendMode::kSimulated;
    } else if (value == "http") {
      config.backend = BackendMode::kHttp;
    } else {
      throw ConfigError("backend must be simulated or http");
    }
  } else if (key == "backbones") {
    std::vector<BackboneConfig> ordered;
    for (const auto& name : to_list(value)) ordered.push_back(backbone_entry(config, name));
    config.backbones = std::move(ordered);
  } else if (key == "skills") {
    config.skills.clear();
    for (const auto& name : to_list(value)) {
      auto s = parse_skill(name);
      if (!s || *s == Skill::kGeneral) throw ConfigError("unknown expert skill '" + name + "'");
      config.skills.push_back(*s);
    }
  } else if (key == "selection") {
    config.selection = to_bool(key, value);
  } else if (key == "deliberator_backbone") {
    config.deliberator_backbone = value;
  } else if (key == "verifier_backbone") {
    config.verifier_backbone = value;
  } else if (key == "judge_backbone") {
    config.judge_backbone = value;
  } else if (key == "judge") {
    if (value == "auto") {
      config.judge = JudgeMode::kAuto;
    } else if (value == "llm") {
      config.judge = JudgeMode::kLlm;
    } else if (value == "exact" || value == "exact_match") {
      config.judge = JudgeMode::kExactMatch;
    } else {
      throw ConfigError("judge must be auto, llm or exact");
    }
  } else if (key == "search") {
    if (value == "none") {
      config.search = SearchMode::kNone;
    } else if (value == "reference_stub") {
      config.search = SearchMode::kReferenceStub;
    } else if (value == "file") {
      config.search = SearchMode::kFile;
    } else if (value == "http") {
      config.search = SearchMode::kHttp;
    } else {
      throw ConfigError("search must be none, reference_stub, file or http");
    }
  } else if (key == "search.file") {
    config.search_file = value;
  } else if (key == "search.endpoint") {
    config.search_endpoint = value;
  } else if (key == "search.max_results") {
    config.search_max_results = to_int<std::size_t>(key, value);
  } else if (key == "temperature.stance") {
    config.stance_temperature = to_double(key, value);
  } else if (key == "temperature.judge") {
    config.judge_temperature = to_double(key, value);
  } else if (key == "temperature.deliberation") {
    config.deliberation_temperature = to_double(key, value);
  } else if (key == "max_tokens") {
    config.max_tokens = to_int<int>(key, value);
  } else if (key == "prompts_dir") {
    config.prompts_dir = value;
  } else if (key == "out") {
    config.out = value;
  } else {
    throw ConfigError("unknown config key " + quoted(key));
  }
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  // Per-skill simulator overrides start from the final defaults, so they are
  // applied after everything else.
  std::vector<std::tuple<int, std::string, std::string>> deferred;
  auto apply = [&](int at, const std::string& key, const std::string& value) {
    try {
      apply_config_value(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(at) + ": " + e.what());
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto t = text::trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    auto key = text::trim(t.substr(0, eq));
    auto value = text::trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.rfind("sim.", 0) == 0 && std::count(key.begin(), key.end(), '.') == 2) {
      deferred.emplace_back(lineno, key, value);
    } else {
      apply(lineno, key, value);
    }
  }
  for (const auto& [at, key, value] : deferred) apply(at, key, value);
  if (config.backbones.empty()) backbone_entry(config, "sim");
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace collabcal
