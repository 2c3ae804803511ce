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

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>

#include "collabcal/backend.hpp"
#include "json.hpp"

namespace collabcal {

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};
  // Jitter is drawn from entropy unless a seed is given.
  std::optional<std::uint64_t> jitter_seed;

  // Delay before retry number `retry` (0-based), without jitter.
  std::chrono::milliseconds backoff(int retry) const;
};

// Token bucket over requests. requests_per_minute <= 0 disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute, int burst = 1);
  // Blocks until a request may be sent.
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  std::chrono::nanoseconds interval_{0};
  int burst_;
  std::mutex mu_;
  Clock::time_point next_free_{};
};

struct HttpProviderOptions {
  // Full URL of the chat-completion endpoint, e.g.
  // https://api.openai.com/v1/chat/completions
  std::string endpoint;
  std::string model_id;
  // Name of the environment variable holding the bearer token; empty sends no
  // Authorization header.
  std::string api_key_env;
  bool logprobs = false;
  RetryPolicy retry;
  double requests_per_minute = 0.0;
  std::chrono::seconds timeout{120};
};

// Chat-completion client speaking the common JSON wire format.
class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(HttpProviderOptions options);
  ~HttpProvider() override;

  CompletionResponse complete(const CompletionRequest& request) const override;
  bool supports_token_probs() const override { return options_.logprobs; }
  std::string name() const override { return "http:" + options_.endpoint; }

 private:
  HttpProviderOptions options_;
  std::string base_url_;
  std::string path_;
  std::string api_key_;
  mutable RateLimiter limiter_;
  mutable std::mutex jitter_mu_;
  mutable std::uint64_t jitter_state_;
};

// Wire encoding, exposed for tests.
nlohmann::json to_wire(const CompletionRequest& request, const std::string& default_model,
                       bool logprobs);
// Throws MalformedResponse when the body does not match the expected shape.
CompletionResponse from_wire(const nlohmann::json& body, bool want_token_probs);

// Splits "scheme://host[:port]/path" into ("scheme://host[:port]", "/path").
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace collabcal
