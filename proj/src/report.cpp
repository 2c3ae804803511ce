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

#include "collabcal/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "collabcal/errors.hpp"
#include "collabcal/pipeline.hpp"
#include "collabcal/transcript.hpp"
#include "json.hpp"

namespace collabcal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::size_t stored_bins(const fs::path& dir) {
  const auto path = dir / "metrics.json";
  if (!fs::exists(path)) return 10;
  auto j = read_json(path);
  if (auto it = j.find("bins"); it != j.end() && it->is_number_unsigned()) return it->get<std::size_t>();
  return 10;
}

}  // namespace

RunReport report(const fs::path& dir, std::optional<std::size_t> bins) {
  const auto transcripts = dir / "transcripts";
  std::vector<fs::path> files;
  if (fs::is_directory(transcripts)) {
    for (const auto& entry : fs::directory_iterator(transcripts)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
  }
  if (files.empty()) throw NoTranscripts("no transcripts under " + transcripts.string());
  std::sort(files.begin(), files.end());

  std::vector<QuestionTranscript> summaries;
  std::vector<metrics::Prediction> pre, post;
  std::size_t failures = 0;
  for (const auto& f : files) {
    auto t = transcript_summary_from_json(read_json(f));
    if (t.status == QuestionStatus::kFailed) {
      ++failures;
      continue;
    }
    pre.push_back(as_prediction(*t.pre));
    post.push_back(as_prediction(*t.post));
  }

  RunReport out;
  out.bins = bins.value_or(stored_bins(dir));
  if (out.bins == 0) throw ConfigError("bins must be at least 1");
  out.pre = metrics::calibration_report(std::move(pre), failures, out.bins);
  out.post = metrics::calibration_report(std::move(post), failures, out.bins);

  write_file(dir / "metrics.json", metrics_json(out.pre, out.post, out.bins));
  write_file(dir / "reliability_pre.csv", metrics::reliability_csv(out.pre.bins));
  write_file(dir / "reliability_post.csv", metrics::reliability_csv(out.post.bins));
  return out;
}

}  // namespace collabcal
