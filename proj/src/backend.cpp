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

#include "collabcal/backend.hpp"

#include <cmath>

#include "collabcal/errors.hpp"

namespace collabcal {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem:
      return "system";
    case Role::kUser:
      return "user";
    case Role::kAssistant:
      return "assistant";
  }
  return "user";
}

void CompletionRequest::validate() const {
  if (messages.empty()) throw InvalidRequest("completion request has no messages");
  if (messages.back().role != Role::kUser) {
    throw InvalidRequest("last message of a completion request must come from the user");
  }
  if (!std::isfinite(temperature) || temperature < 0.0) {
    throw InvalidRequest("temperature must be finite and non-negative");
  }
  if (max_tokens <= 0) throw InvalidRequest("max_tokens must be positive");
}

void CompletionResponse::validate() const {
  if (!token_probs) return;
  if (token_probs->empty()) throw MalformedResponse("token_probs present but empty");
  for (double p : *token_probs) {
    if (!(p > 0.0 && p <= 1.0)) {
      throw MalformedResponse("token probability outside (0, 1]: " + std::to_string(p));
    }
  }
}

CompletionResponse complete(const CompletionRequest& request, const Provider& provider) {
  request.validate();
  if (request.want_token_probs && !provider.supports_token_probs()) {
    throw CapabilityError("provider '" + provider.name() + "' does not expose token probabilities");
  }
  CompletionResponse response = provider.complete(request);
  response.validate();
  if (!request.want_token_probs) response.token_probs.reset();
  return response;
}

CompletionRequest make_request(std::string model_id, std::string user_prompt, double temperature,
                               int max_tokens, RequestContext context) {
  CompletionRequest req;
  req.model_id = std::move(model_id);
  req.messages.push_back({Role::kUser, std::move(user_prompt)});
  req.temperature = temperature;
  req.max_tokens = max_tokens;
  req.context = std::move(context);
  return req;
}

}  // namespace collabcal
