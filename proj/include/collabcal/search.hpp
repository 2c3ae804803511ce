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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace collabcal {

struct SearchResult {
  std::string title;
  std::string snippet;
};

// Used by the self-ask expert and by premise verification.
class SearchProvider {
 public:
  virtual ~SearchProvider() = default;
  // Throws TransportError when the backend is unreachable.
  virtual std::vector<SearchResult> search(std::string_view question_id,
                                           std::string_view query) const = 0;
};

// Fixed results per question id; the query is ignored.
class LocalSearchStub final : public SearchProvider {
 public:
  void add(std::string question_id, std::vector<SearchResult> results);
  std::vector<SearchResult> search(std::string_view question_id,
                                   std::string_view query) const override;

  // JSONL: {"question_id": "...", "results": [{"title": "...", "snippet": "..."}]}
  static LocalSearchStub from_jsonl(const std::filesystem::path& path);

 private:
  std::map<std::string, std::vector<SearchResult>, std::less<>> results_;
};

// GET <endpoint>?q=<query>; accepts a JSON array of {title, snippet} or an
// object with such an array under "results".
class HttpSearchProvider final : public SearchProvider {
 public:
  explicit HttpSearchProvider(std::string endpoint, std::size_t max_results = 3);
  std::vector<SearchResult> search(std::string_view question_id,
                                   std::string_view query) const override;

 private:
  std::string base_url_;
  std::string path_;
  std::size_t max_results_;
};

// Search provider that always fails; stands in for an unreachable service.
class OfflineSearch final : public SearchProvider {
 public:
  std::vector<SearchResult> search(std::string_view, std::string_view) const override;
};

std::string format_search_results(const std::vector<SearchResult>& results);

}  // namespace collabcal
