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

#include <string>
#include <string_view>
#include <vector>

namespace collabcal::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
// Position of the first case-insensitive occurrence of `needle`, or npos.
std::size_t ifind(std::string_view haystack, std::string_view needle,
                  std::size_t from = 0);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Answer normalization for equivalence short-circuiting: lowercase, drop
// punctuation and the articles a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view s);

// True when `needle` occurs in `haystack` as a run of whole tokens after
// both are normalized.
bool contains_normalized(std::string_view haystack, std::string_view needle);

// Fixed-precision decimal rendering used wherever a number is written into a
// prompt or a simulated reply.
std::string format_decimal(double v, int digits = 4);

}  // namespace collabcal::text
