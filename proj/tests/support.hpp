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

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "collabcal/backend.hpp"
#include "collabcal/ensemble.hpp"
#include "collabcal/hashing.hpp"
#include "collabcal/simulated_provider.hpp"

namespace collabcal::testing {

inline std::string tag(const CompletionRequest& r, std::string_view key) {
  auto it = r.context.find(std::string(key));
  return it == r.context.end() ? std::string{} : it->second;
}

inline CompletionResponse text_reply(std::string text) {
  CompletionResponse r;
  r.text = std::move(text);
  return r;
}

// Backbone whose replies come from `fn`.
inline Backbone mock_backbone(std::string name, CallbackProvider::Fn fn, bool token_probs = false) {
  return {name, name, std::make_shared<CallbackProvider>(name, std::move(fn), token_probs)};
}

// Simulated backbone over a world holding `gold` for the given questions.
inline Backbone sim_backbone(std::string name, std::uint64_t seed, SimAgentParams params,
                             const std::vector<Question>& questions,
                             std::map<std::string, SimAgentParams> by_skill = {},
                             SimPolicy policy = {}) {
  auto world = std::make_shared<SimWorld>();
  for (const auto& q : questions) world->add(q.id, q.references, {}, policy.distractor_count);
  SimulatedProviderOptions opt;
  opt.seed = seed;
  opt.backbone = name;
  opt.defaults = params;
  opt.by_skill = std::move(by_skill);
  opt.policy = policy;
  return {name, name, std::make_shared<SimulatedProvider>(opt, world)};
}

inline std::vector<Question> toy_questions(std::size_t n, const std::string& prefix = "q") {
  std::vector<Question> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto id = prefix + std::to_string(i);
    out.push_back({id, "What is the code word for entry " + id + "?", {"word" + std::to_string(i)}});
  }
  return out;
}

inline std::vector<AgentProfile> deliberators(const Backbone& bb, std::size_t n) {
  std::vector<AgentProfile> out;
  for (std::size_t i = 1; i <= n; ++i) {
    out.push_back({"d" + std::to_string(i), bb, Skill::kGeneral, AgentRole::kDeliberator});
  }
  return out;
}

// Small seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform() { return rng_.uniform(); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }
  std::size_t index(std::size_t n) { return rng_.index(n); }
  std::size_t range(std::size_t lo, std::size_t hi) { return lo + rng_.index(hi - lo + 1); }
  bool coin(double p = 0.5) { return rng_.uniform() < p; }
  HashStream& stream() { return rng_; }

 private:
  HashStream rng_;
};

}  // namespace collabcal::testing
