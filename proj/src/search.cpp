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

#include "collabcal/search.hpp"

#include <fstream>

#include "collabcal/errors.hpp"
#include "collabcal/http_provider.hpp"
#include "httplib.h"
#include "json.hpp"

namespace collabcal {

namespace {

std::vector<SearchResult> results_from_json(const nlohmann::json& arr, std::size_t limit) {
  std::vector<SearchResult> out;
  for (const auto& item : arr) {
    if (out.size() >= limit) break;
    out.push_back({item.value("title", std::string{}), item.value("snippet", std::string{})});
  }
  return out;
}

}  // namespace

void LocalSearchStub::add(std::string question_id, std::vector<SearchResult> results) {
  auto& slot = results_[std::move(question_id)];
  slot.insert(slot.end(), std::make_move_iterator(results.begin()),
              std::make_move_iterator(results.end()));
}

std::vector<SearchResult> LocalSearchStub::search(std::string_view question_id,
                                                  std::string_view) const {
  auto it = results_.find(question_id);
  return it == results_.end() ? std::vector<SearchResult>{} : it->second;
}

LocalSearchStub LocalSearchStub::from_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open search stub file " + path.string());
  LocalSearchStub stub;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      stub.add(j.at("question_id").get<std::string>(),
               results_from_json(j.at("results"), std::numeric_limits<std::size_t>::max()));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return stub;
}

HttpSearchProvider::HttpSearchProvider(std::string endpoint, std::size_t max_results)
    : max_results_(max_results) {
  std::tie(base_url_, path_) = split_url(endpoint);
}

std::vector<SearchResult> HttpSearchProvider::search(std::string_view,
                                                     std::string_view query) const {
  httplib::Client client(base_url_);
  client.set_read_timeout(std::chrono::seconds(30));
  httplib::Params params{{"q", std::string(query)}};
  auto res = client.Get(path_, params, httplib::Headers{});
  if (!res) throw TransportError("search: " + httplib::to_string(res.error()));
  if (res->status != 200) throw TransportError("search: HTTP " + std::to_string(res->status));
  try {
    auto body = nlohmann::json::parse(res->body);
    if (body.is_object()) return results_from_json(body.at("results"), max_results_);
    return results_from_json(body, max_results_);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("search response: ") + e.what());
  }
}

std::vector<SearchResult> OfflineSearch::search(std::string_view, std::string_view) const {
  throw TransportError("search service offline");
}

std::string format_search_results(const std::vector<SearchResult>& results) {
  std::string out;
  for (const auto& r : results) {
    out += "- ";
    if (!r.title.empty()) out += r.title + ": ";
    out += r.snippet + "\n";
  }
  return out;
}

}  // namespace collabcal
