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

#include "collabcal/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "collabcal/errors.hpp"
#include "collabcal/text.hpp"
#include "json.hpp"

namespace collabcal {

using nlohmann::json;

std::string_view to_string(Split split) { return split == Split::kValidation ? "validation" : "test"; }

std::vector<std::string> DatasetRecord::distractors() const {
  std::vector<std::string> out;
  auto it = metadata.find("distractors");
  if (it == metadata.end()) return out;
  for (auto& d : text::split(it->second, '|')) {
    auto t = text::trim(d);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

namespace {

DatasetRecord parse_record(const std::string& line, int lineno) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(lineno, e.what());
  }
  if (!j.is_object()) throw ParseError(lineno, "expected a JSON object");

  auto str = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw ParseError(lineno, std::string("missing string field '") + key + "'");
    return it->get<std::string>();
  };

  DatasetRecord r;
  r.id = str("id");
  if (r.id.empty()) throw ParseError(lineno, "empty id");
  r.question = str("question");

  auto refs = j.find("reference_answers");
  if (refs == j.end() || !refs->is_array()) throw ParseError(lineno, "missing array field 'reference_answers'");
  for (const auto& ref : *refs) {
    if (!ref.is_string()) throw ParseError(lineno, "reference_answers must hold strings");
    r.reference_answers.push_back(ref.get<std::string>());
  }
  if (r.reference_answers.empty()) throw EmptyReferences(r.id);

  if (auto split = j.find("split"); split != j.end()) {
    if (!split->is_string()) throw ParseError(lineno, "split must be a string");
    const auto s = text::to_lower(split->get<std::string>());
    if (s == "validation" || s == "dev") {
      r.split = Split::kValidation;
    } else if (s == "test") {
      r.split = Split::kTest;
    } else {
      throw ParseError(lineno, "split must be validation or test");
    }
  }

  if (auto meta = j.find("metadata"); meta != j.end() && !meta->is_null()) {
    if (!meta->is_object()) throw ParseError(lineno, "metadata must be an object");
    for (const auto& [k, v] : meta->items()) r.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return r;
}

}  // namespace

std::vector<DatasetRecord> parse_dataset(std::string_view text) {
  std::vector<DatasetRecord> out;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto r = parse_record(line, lineno);
    if (!seen.insert(r.id).second) throw DuplicateId(r.id);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<DatasetRecord> ingest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

std::string to_jsonl(const std::vector<DatasetRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json j = {{"id", r.id},
              {"question", r.question},
              {"reference_answers", r.reference_answers},
              {"split", std::string(to_string(r.split))}};
    if (!r.metadata.empty()) j["metadata"] = r.metadata;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace collabcal
