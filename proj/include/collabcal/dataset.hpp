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

#include "collabcal/ensemble.hpp"

namespace collabcal {

enum class Split { kValidation, kTest };

std::string_view to_string(Split split);

struct DatasetRecord {
  std::string id;
  std::string question;
  std::vector<std::string> reference_answers;
  Split split = Split::kTest;
  std::map<std::string, std::string> metadata;

  Question as_question() const { return {id, question, reference_answers}; }
  // Wrong answers listed under metadata "distractors", '|'-separated.
  std::vector<std::string> distractors() const;
};

// One JSON object per line; blank lines are skipped. Errors carry the
// 1-based line number.
std::vector<DatasetRecord> ingest(const std::filesystem::path& path);
std::vector<DatasetRecord> parse_dataset(std::string_view text);

std::string to_jsonl(const std::vector<DatasetRecord>& records);

}  // namespace collabcal
