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

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace collabcal {

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(Role role);

struct Message {
  Role role = Role::kUser;
  std::string content;
};

// Routing tags attached to a request. They never leave the process: the HTTP
// provider ignores them, the simulated provider keys its randomness on them.
// Well-known keys are listed in `context_keys`.
using RequestContext = std::map<std::string, std::string>;

namespace context_keys {
inline constexpr std::string_view kQuestionId = "question_id";
inline constexpr std::string_view kAgentId = "agent_id";
inline constexpr std::string_view kCallKind = "call_kind";
inline constexpr std::string_view kSkill = "skill";
// Disambiguates repeated calls of the same kind by one agent (e.g. the
// argument being rated).
inline constexpr std::string_view kTarget = "target";
}  // namespace context_keys

struct CompletionRequest {
  std::string model_id;
  std::vector<Message> messages;
  double temperature = 0.0;
  int max_tokens = 512;
  bool want_token_probs = false;
  RequestContext context;

  // Throws InvalidRequest when messages are empty, the last message is not
  // from the user, the temperature is negative or non-finite, or max_tokens
  // is not positive.
  void validate() const;
};

struct CompletionResponse {
  std::string text;
  std::optional<std::vector<double>> token_probs;
  std::map<std::string, std::string> provider_meta;

  // Throws MalformedResponse if token_probs is present but empty or holds a
  // value outside (0, 1].
  void validate() const;
};

// A text-generation backend. Implementations must be safe to call from many
// threads at once.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) const = 0;
  virtual bool supports_token_probs() const = 0;
  virtual std::string name() const = 0;
};

using ProviderHandle = std::shared_ptr<const Provider>;

// Validates the request, refuses token-probability requests the provider
// cannot serve (CapabilityError), dispatches, and validates the response.
CompletionResponse complete(const CompletionRequest& request, const Provider& provider);

// Provider backed by a callable. Used for mocks and for embedding custom
// backends without subclassing.
class CallbackProvider final : public Provider {
 public:
  using Fn = std::function<CompletionResponse(const CompletionRequest&)>;
  CallbackProvider(std::string name, Fn fn, bool token_probs = false)
      : name_(std::move(name)), fn_(std::move(fn)), token_probs_(token_probs) {}

  CompletionResponse complete(const CompletionRequest& request) const override {
    return fn_(request);
  }
  bool supports_token_probs() const override { return token_probs_; }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  Fn fn_;
  bool token_probs_;
};

// Convenience for building requests.
CompletionRequest make_request(std::string model_id, std::string user_prompt,
                               double temperature, int max_tokens,
                               RequestContext context = {});

}  // namespace collabcal
