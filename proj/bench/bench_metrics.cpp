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

// Serial reference kernels against the OpenMP ones.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <vector>

#include "collabcal/metrics.hpp"

namespace {

using collabcal::metrics::Distance;
using collabcal::metrics::Prediction;

const std::vector<Prediction>& predictions(std::size_t n) {
  static std::vector<Prediction> cache;
  if (cache.size() != n) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    cache.clear();
    for (std::size_t i = 0; i < n; ++i) {
      double c = u(rng);
      cache.push_back({"q" + std::to_string(i), c, u(rng) < c});
    }
  }
  return cache;
}

void BM_EceSerial(benchmark::State& state) {
  const auto& p = predictions(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(collabcal::metrics::serial::ece(p, 10, Distance::kAbsolute));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EceParallel(benchmark::State& state) {
  const auto& p = predictions(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(collabcal::metrics::ece(p, 10, Distance::kAbsolute));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = omp_get_max_threads();
}

void BM_BrierSerial(benchmark::State& state) {
  const auto& p = predictions(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(collabcal::metrics::serial::brier(p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BrierParallel(benchmark::State& state) {
  const auto& p = predictions(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(collabcal::metrics::brier(p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = omp_get_max_threads();
}

}  // namespace

BENCHMARK(BM_EceSerial)->Arg(1 << 14)->Arg(1 << 20);
BENCHMARK(BM_EceParallel)->Arg(1 << 14)->Arg(1 << 20);
BENCHMARK(BM_BrierSerial)->Arg(1 << 14)->Arg(1 << 20);
BENCHMARK(BM_BrierParallel)->Arg(1 << 14)->Arg(1 << 20);

BENCHMARK_MAIN();
