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

#include "collabcal/http_provider.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "collabcal/errors.hpp"
#include "collabcal/hashing.hpp"
#include "httplib.h"

namespace collabcal {

std::chrono::milliseconds RetryPolicy::backoff(int retry) const {
  double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, retry);
  ms = std::min(ms, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

RateLimiter::RateLimiter(double requests_per_minute, int burst) : burst_(std::max(1, burst)) {
  if (requests_per_minute > 0.0) {
    interval_ = std::chrono::nanoseconds(static_cast<std::int64_t>(60e9 / requests_per_minute));
  }
}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  Clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    auto now = Clock::now();
    auto earliest = now - interval_ * (burst_ - 1);
    slot = std::max(earliest, next_free_);
    next_free_ = slot + interval_;
    if (slot < now) slot = now;
  }
  std::this_thread::sleep_until(slot);
}

std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must include a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

nlohmann::json to_wire(const CompletionRequest& request, const std::string& default_model,
                       bool logprobs) {
  nlohmann::json body;
  body["model"] = request.model_id.empty() ? default_model : request.model_id;
  auto& messages = body["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  if (request.want_token_probs && logprobs) body["logprobs"] = true;
  return body;
}

CompletionResponse from_wire(const nlohmann::json& body, bool want_token_probs) {
  CompletionResponse out;
  try {
    const auto& choice = body.at("choices").at(0);
    const auto& content = choice.at("message").at("content");
    if (!content.is_string()) throw MalformedResponse("message.content is not a string");
    out.text = content.get<std::string>();
    if (want_token_probs) {
      if (!choice.contains("logprobs") || choice["logprobs"].is_null()) {
        throw MalformedResponse("logprobs requested but absent from the response");
      }
      std::vector<double> probs;
      for (const auto& tok : choice["logprobs"].at("content")) {
        probs.push_back(std::exp(tok.at("logprob").get<double>()));
      }
      out.token_probs = std::move(probs);
    }
    if (body.contains("model") && body["model"].is_string()) {
      out.provider_meta["model"] = body["model"].get<std::string>();
    }
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
      out.provider_meta["finish_reason"] = choice["finish_reason"].get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("unexpected response shape: ") + e.what());
  }
  out.validate();
  return out;
}

HttpProvider::HttpProvider(HttpProviderOptions options)
    : options_(std::move(options)),
      limiter_(options_.requests_per_minute),
      jitter_state_(options_.retry.jitter_seed ? *options_.retry.jitter_seed
                                               : std::random_device{}()) {
  std::tie(base_url_, path_) = split_url(options_.endpoint);
  if (!options_.api_key_env.empty()) {
    const char* key = std::getenv(options_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw AuthError("environment variable " + options_.api_key_env + " is not set");
    }
    api_key_ = key;
  }
}

HttpProvider::~HttpProvider() = default;

CompletionResponse HttpProvider::complete(const CompletionRequest& request) const {
  const std::string payload = to_wire(request, options_.model_id, options_.logprobs).dump();
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  std::string last_error;
  const int attempts = std::max(1, options_.retry.max_attempts);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      auto delay = options_.retry.backoff(attempt - 1);
      double jitter;
      {
        std::lock_guard lock(jitter_mu_);
        jitter_state_ = splitmix64(jitter_state_);
        jitter = unit_interval(jitter_state_);
      }
      delay += std::chrono::milliseconds(
          static_cast<std::int64_t>(0.25 * jitter * static_cast<double>(delay.count())));
      spdlog::warn("retrying {} in {} ms after: {}", options_.endpoint, delay.count(), last_error);
      std::this_thread::sleep_for(delay);
    }
    limiter_.acquire();

    httplib::Client client(base_url_);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedResponse(std::string("response is not JSON: ") + e.what());
    }
    return from_wire(body, request.want_token_probs);
  }
  throw TransportError("giving up after " + std::to_string(attempts) + " attempts: " + last_error);
}

}  // namespace collabcal
