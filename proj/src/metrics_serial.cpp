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

#include <cmath>

#include "collabcal/errors.hpp"
#include "collabcal/metrics.hpp"

namespace collabcal::metrics::serial {

ReliabilityBins reliability_bins(std::span<const Prediction> predictions, std::size_t bin_count) {
  if (bin_count == 0) throw ConfigError("bin count must be at least 1");
  std::vector<std::size_t> count(bin_count, 0), correct(bin_count, 0);
  std::vector<double> conf(bin_count, 0.0);
  for (const auto& p : predictions) {
    auto b = bin_index(p.confidence, bin_count);
    ++count[b];
    if (p.correct) ++correct[b];
    conf[b] += p.confidence;
  }
  ReliabilityBins out;
  out.bin_count = bin_count;
  for (std::size_t b = 0; b < bin_count; ++b) {
    ReliabilityBin bin;
    bin.lo = static_cast<double>(b) / static_cast<double>(bin_count);
    bin.hi = static_cast<double>(b + 1) / static_cast<double>(bin_count);
    bin.count = count[b];
    if (count[b] > 0) {
      bin.mean_confidence = conf[b] / static_cast<double>(count[b]);
      bin.accuracy = static_cast<double>(correct[b]) / static_cast<double>(count[b]);
    }
    out.bins.push_back(bin);
  }
  return out;
}

double ece(std::span<const Prediction> predictions, std::size_t bin_count, Distance distance) {
  if (predictions.empty()) throw EmptyInput("ECE of an empty prediction set");
  auto bins = serial::reliability_bins(predictions, bin_count);
  const double n = static_cast<double>(predictions.size());
  double total = 0.0;
  for (const auto& bin : bins.bins) {
    if (bin.count == 0) continue;
    double gap = *bin.accuracy - *bin.mean_confidence;
    total += (static_cast<double>(bin.count) / n) * (distance == Distance::kAbsolute ? std::fabs(gap) : gap * gap);
  }
  return total;
}

double brier(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw EmptyInput("Brier score of an empty prediction set");
  double sum = 0.0;
  for (const auto& p : predictions) {
    double e = p.confidence - (p.correct ? 1.0 : 0.0);
    sum += e * e;
  }
  return sum / static_cast<double>(predictions.size());
}

}  // namespace collabcal::metrics::serial
