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
#include <filesystem>
#include <optional>
#include <vector>

#include "collabcal/dataset.hpp"
#include "collabcal/metrics.hpp"

namespace collabcal {

struct RunReport {
  metrics::CalibrationReport pre;
  metrics::CalibrationReport post;
  std::size_t bins = 10;
};

// Recomputes metrics from <dir>/transcripts/*.json alone and rewrites
// metrics.json and reliability_{pre,post}.csv. The bin count comes from
// `bins`, else the existing metrics.json, else 10.
// Throws NoTranscripts when there is nothing to read.
RunReport report(const std::filesystem::path& dir, std::optional<std::size_t> bins = std::nullopt);

struct SynthOptions {
  std::size_t test = 50;
  std::size_t validation = 16;
  std::uint64_t seed = 0;
};

// Toy questions with one reference each and explicit decoys in metadata.
std::vector<DatasetRecord> synth_dataset(const SynthOptions& options);

}  // namespace collabcal
