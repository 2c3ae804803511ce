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

#include "collabcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "collabcal/errors.hpp"

namespace collabcal::metrics {

namespace {

constexpr std::size_t kChunk = 4096;

struct BinSums {
  std::vector<std::size_t> count;
  std::vector<std::size_t> correct;
  std::vector<double> confidence;
  explicit BinSums(std::size_t b) : count(b, 0), correct(b, 0), confidence(b, 0.0) {}
};

void require_bins(std::size_t bin_count) {
  if (bin_count == 0) throw ConfigError("bin count must be at least 1");
}

double edge(std::size_t k, std::size_t bin_count) {
  return static_cast<double>(k) / static_cast<double>(bin_count);
}

BinSums accumulate(std::span<const Prediction> predictions, std::size_t bin_count) {
  const std::size_t n = predictions.size();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<BinSums> partial(chunks, BinSums(bin_count));

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    auto& local = partial[static_cast<std::size_t>(c)];
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(n, begin + kChunk);
    for (std::size_t i = begin; i < end; ++i) {
      const auto& p = predictions[i];
      const std::size_t b = bin_index(p.confidence, bin_count);
      ++local.count[b];
      local.correct[b] += p.correct ? 1 : 0;
      local.confidence[b] += p.confidence;
    }
  }

  BinSums total(bin_count);
  for (const auto& local : partial) {
    for (std::size_t b = 0; b < bin_count; ++b) {
      total.count[b] += local.count[b];
      total.correct[b] += local.correct[b];
      total.confidence[b] += local.confidence[b];
    }
  }
  return total;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::size_t bin_index(double confidence, std::size_t bin_count) {
  if (!(confidence > 0.0)) return 0;
  if (confidence >= 1.0) return bin_count - 1;
  auto b = static_cast<std::size_t>(std::floor(confidence * static_cast<double>(bin_count)));
  b = std::min(b, bin_count - 1);
  // Reconcile floating rounding with the edges as they are reported.
  if (b + 1 < bin_count && confidence >= edge(b + 1, bin_count)) ++b;
  if (b > 0 && confidence < edge(b, bin_count)) --b;
  return b;
}

ReliabilityBins reliability_bins(std::span<const Prediction> predictions, std::size_t bin_count) {
  require_bins(bin_count);
  const BinSums sums = accumulate(predictions, bin_count);
  ReliabilityBins out;
  out.bin_count = bin_count;
  out.bins.resize(bin_count);
  for (std::size_t b = 0; b < bin_count; ++b) {
    auto& bin = out.bins[b];
    bin.lo = edge(b, bin_count);
    bin.hi = edge(b + 1, bin_count);
    bin.count = sums.count[b];
    if (bin.count > 0) {
      bin.mean_confidence = sums.confidence[b] / static_cast<double>(bin.count);
      bin.accuracy = static_cast<double>(sums.correct[b]) / static_cast<double>(bin.count);
    }
  }
  return out;
}

double ece_from_bins(const ReliabilityBins& bins, Distance distance) {
  std::size_t n = 0;
  for (const auto& bin : bins.bins) n += bin.count;
  if (n == 0) throw EmptyInput("ECE of an empty prediction set");
  double total = 0.0;
  for (const auto& bin : bins.bins) {
    if (bin.count == 0) continue;
    const double gap = *bin.accuracy - *bin.mean_confidence;
    const double d = distance == Distance::kAbsolute ? std::abs(gap) : gap * gap;
    total += static_cast<double>(bin.count) / static_cast<double>(n) * d;
  }
  return total;
}

double ece(std::span<const Prediction> predictions, std::size_t bin_count, Distance distance) {
  if (predictions.empty()) throw EmptyInput("ECE of an empty prediction set");
  return ece_from_bins(reliability_bins(predictions, bin_count), distance);
}

double brier(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw EmptyInput("Brier score of an empty prediction set");
  const std::size_t n = predictions.size();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(n, begin + kChunk);
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double e = predictions[i].confidence - (predictions[i].correct ? 1.0 : 0.0);
      sum += e * e;
    }
    partial[static_cast<std::size_t>(c)] = sum;
  }

  double total = 0.0;
  for (double s : partial) total += s;
  return total / static_cast<double>(n);
}

double accuracy(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw EmptyInput("accuracy of an empty prediction set");
  std::size_t correct = 0;
  for (const auto& p : predictions) correct += p.correct ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

CalibrationReport calibration_report(std::vector<Prediction> predictions, std::size_t failures,
                                     std::size_t bin_count) {
  std::stable_sort(predictions.begin(), predictions.end(),
                   [](const Prediction& a, const Prediction& b) { return a.question_id < b.question_id; });
  CalibrationReport report;
  report.n = predictions.size();
  report.failures = failures;
  report.bins = reliability_bins(predictions, bin_count);
  if (!predictions.empty()) {
    report.accuracy = accuracy(predictions);
    report.ece_abs = ece_from_bins(report.bins, Distance::kAbsolute);
    report.ece_sq = ece_from_bins(report.bins, Distance::kSquared);
    report.brier = brier(predictions);
  }
  return report;
}

std::string reliability_csv(const ReliabilityBins& bins) {
  std::string out = "bin_lo,bin_hi,count,mean_confidence,accuracy\n";
  for (const auto& bin : bins.bins) {
    out += fixed6(bin.lo) + "," + fixed6(bin.hi) + "," + std::to_string(bin.count) + ",";
    out += (bin.mean_confidence ? fixed6(*bin.mean_confidence) : "") + ",";
    out += (bin.accuracy ? fixed6(*bin.accuracy) : "") + "\n";
  }
  return out;
}

}  // namespace collabcal::metrics
