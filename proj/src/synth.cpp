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

#include <cstdio>

#include "collabcal/hashing.hpp"
#include "collabcal/report.hpp"

namespace collabcal {

namespace {

constexpr const char* kThings[] = {"element", "river", "composer", "planet", "mineral",
                                   "island",  "enzyme", "novel",   "bridge", "comet"};
constexpr const char* kSyllables[] = {"ka", "lo", "mi", "ren", "su", "ta", "vo", "zel", "dor", "fi"};

std::string word(HashStream& rng) {
  std::string out;
  const std::size_t n = 2 + rng.index(2);
  for (std::size_t i = 0; i < n; ++i) out += kSyllables[rng.index(std::size(kSyllables))];
  return out;
}

}  // namespace

std::vector<DatasetRecord> synth_dataset(const SynthOptions& options) {
  std::vector<DatasetRecord> out;
  auto make = [&](const char* prefix, std::size_t i, Split split) {
    HashStream rng(hash_parts(options.seed, {"synth", prefix, std::to_string(i)}));
    char id[32];
    std::snprintf(id, sizeof id, "%s%04zu", prefix, i);
    DatasetRecord r;
    r.id = id;
    const std::string thing = kThings[rng.index(std::size(kThings))];
    const std::string answer = word(rng) + "-" + std::to_string(i);
    r.question = "Which " + thing + " is catalogued under entry " + r.id + "?";
    r.reference_answers = {answer};
    r.split = split;
    r.metadata["distractors"] = answer + "-decoy-1|" + answer + "-decoy-2|" + answer + "-decoy-3";
    out.push_back(std::move(r));
  };
  for (std::size_t i = 0; i < options.validation; ++i) make("v", i, Split::kValidation);
  for (std::size_t i = 0; i < options.test; ++i) make("q", i, Split::kTest);
  return out;
}

}  // namespace collabcal
