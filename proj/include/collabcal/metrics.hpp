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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace collabcal::metrics {

struct Prediction {
  std::string question_id;
  double confidence = 0.0;
  bool correct = false;
};

enum class Distance { kAbsolute, kSquared };

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  // Null for empty bins.
  std::optional<double> mean_confidence;
  std::optional<double> accuracy;
};

struct ReliabilityBins {
  std::size_t bin_count = 0;
  std::vector<ReliabilityBin> bins;
};

// Bin of `confidence` among `bin_count` equal-width bins over [0, 1]. A value
// on an interior edge goes to the upper bin; 1.0 goes to the last bin.
std::size_t bin_index(double confidence, std::size_t bin_count);

// Parallel kernels. Work is split into fixed-size chunks whose partial sums
// are merged in chunk order, so results do not depend on the thread count.
ReliabilityBins reliability_bins(std::span<const Prediction> predictions, std::size_t bin_count);
// Throws EmptyInput for no predictions, ConfigError for bin_count == 0.
double ece(std::span<const Prediction> predictions, std::size_t bin_count, Distance distance);
double brier(std::span<const Prediction> predictions);
double accuracy(std::span<const Prediction> predictions);

// ECE from already-computed bins.
double ece_from_bins(const ReliabilityBins& bins, Distance distance);

// Straight-line reference implementations, kept for tests and benchmarks.
namespace serial {
ReliabilityBins reliability_bins(std::span<const Prediction> predictions, std::size_t bin_count);
double ece(std::span<const Prediction> predictions, std::size_t bin_count, Distance distance);
double brier(std::span<const Prediction> predictions);
}  // namespace serial

struct CalibrationReport {
  std::size_t n = 0;
  std::size_t failures = 0;
  // All absent when n == 0.
  std::optional<double> accuracy;
  std::optional<double> ece_abs;
  std::optional<double> ece_sq;
  std::optional<double> brier;
  ReliabilityBins bins;
};

// Sorts by question_id before reducing so the result depends only on the
// multiset of predictions.
CalibrationReport calibration_report(std::vector<Prediction> predictions, std::size_t failures,
                                     std::size_t bin_count);

// Header `bin_lo,bin_hi,count,mean_confidence,accuracy`, six decimals, empty
// fields for empty bins.
std::string reliability_csv(const ReliabilityBins& bins);

}  // namespace collabcal::metrics
