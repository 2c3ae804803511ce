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

#include "collabcal/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "collabcal/errors.hpp"
#include "collabcal/text.hpp"

namespace collabcal {

namespace {

bool is_placeholder_char(char c) {
  return std::isupper(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
         c == '-' || c == '_';
}

// Invokes on_literal/on_placeholder for each piece of `body`.
template <typename Literal, typename Placeholder>
void scan(std::string_view body, Literal&& on_literal, Placeholder&& on_placeholder) {
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto open = body.find("${", pos);
    if (open == std::string_view::npos) break;
    auto close = body.find('}', open + 2);
    if (close == std::string_view::npos) break;
    auto name = body.substr(open + 2, close - open - 2);
    if (name.empty() || !std::all_of(name.begin(), name.end(), is_placeholder_char)) {
      on_literal(body.substr(pos, open + 2 - pos));
      pos = open + 2;
      continue;
    }
    on_literal(body.substr(pos, open - pos));
    on_placeholder(name);
    pos = close + 1;
  }
  on_literal(body.substr(pos));
}

std::string strip_trailing_newline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

// Template files may open with '#' comment lines (a license notice); they and
// one following blank line are not part of the prompt.
std::string strip_comment_header(std::string s) {
  std::size_t pos = 0;
  while (pos < s.size() && s[pos] == '#') {
    const auto eol = s.find('\n', pos);
    pos = eol == std::string::npos ? s.size() : eol + 1;
  }
  if (pos > 0 && pos < s.size() && s[pos] == '\n') ++pos;
  return s.substr(pos);
}

std::string clean_answer(std::string_view raw) {
  std::string s = text::trim(raw);
  auto strip_pair = [&](char open, char close) {
    if (s.size() >= 2 && s.front() == open && s.back() == close) {
      s = text::trim(s.substr(1, s.size() - 2));
      return true;
    }
    return false;
  };
  auto strip_tail = [&] {
    const auto before = s.size();
    while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';')) s.pop_back();
    s = text::trim(s);
    return s.size() != before;
  };
  while (strip_tail() | strip_pair('"', '"') || strip_pair('\'', '\'') || strip_pair('<', '>') ||
         strip_pair('*', '*')) {
  }
  return s;
}

bool is_abstention(std::string_view answer) {
  auto a = text::to_lower(answer);
  return a.empty() || a == "abstain" || a == "i don't know" || a == "i do not know" ||
         a == "cannot answer" || a == "i cannot answer";
}

std::optional<double> leading_number(std::string_view text) {
  static const std::regex number_re(
      R"(^[\s"'<*]*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(%?))");
  std::string s(text.substr(0, std::min<std::size_t>(text.size(), 64)));
  std::smatch m;
  if (!std::regex_search(s, m, number_re)) return std::nullopt;
  double v = std::strtod(m[1].str().c_str(), nullptr);
  if (std::isnan(v)) return std::nullopt;
  if (m[2].matched && m[2].length() > 0) v /= 100.0;
  return std::clamp(v, 0.0, 1.0);
}

std::optional<double> labelled_number(std::string_view text, std::string_view label) {
  auto pos = text::ifind(text, label);
  if (pos == std::string_view::npos) return std::nullopt;
  auto rest = text.substr(pos + label.size());
  auto colon = rest.find_first_not_of(" \t");
  if (colon != std::string_view::npos && (rest[colon] == ':' || rest[colon] == '=')) {
    rest = rest.substr(colon + 1);
  }
  return leading_number(rest);
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string name, std::string body) {
  PromptTemplate t{std::move(name), std::move(body), {}};
  scan(
      t.body, [](std::string_view) {},
      [&](std::string_view ph) { t.required_placeholders.emplace(ph); });
  return t;
}

std::string PromptTemplate::render(const VariableMap& variables) const {
  for (const auto& ph : required_placeholders) {
    if (!variables.contains(ph)) throw MissingPlaceholder(name, ph);
  }
  std::string out;
  out.reserve(body.size());
  scan(
      body, [&](std::string_view lit) { out += lit; },
      [&](std::string_view ph) { out += variables.find(std::string(ph))->second; });
  return out;
}

PromptRegistry PromptRegistry::builtin() {
  PromptRegistry r;
  for (const auto& [name, body] : builtin_prompt_sources()) {
    r.put(PromptTemplate::parse(std::string(name), strip_comment_header(std::string(body))));
  }
  return r;
}

PromptRegistry PromptRegistry::from_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("prompt directory does not exist: " + dir.string());
  }
  PromptRegistry r = builtin();
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    r.put(PromptTemplate::parse(entry.path().stem().string(), strip_trailing_newline(strip_comment_header(ss.str()))));
  }
  return r;
}

const PromptTemplate& PromptRegistry::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw UnknownTemplate("no template named '" + std::string(name) + "'");
  return it->second;
}

bool PromptRegistry::contains(std::string_view name) const { return templates_.find(name) != templates_.end(); }

std::vector<std::string> PromptRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : templates_) out.push_back(name);
  return out;
}

void PromptRegistry::put(PromptTemplate tmpl) {
  auto name = tmpl.name;
  templates_.insert_or_assign(std::move(name), std::move(tmpl));
}

std::string render(const PromptRegistry& registry, std::string_view template_name,
                   const VariableMap& variables) {
  return registry.render(template_name, variables);
}

// --- reply parsing -------------------------------------------------------

std::optional<double> parse_confidence(std::string_view text) {
  return labelled_number(text, "confidence:");
}

ParsedStance parse_stance(std::string_view text) {
  ParsedStance out;
  auto pos = text::ifind(text, "answer:");
  if (pos == std::string_view::npos) return out;
  auto start = pos + 7;
  auto end = std::min(text::ifind(text, "confidence", start), text.find('\n', start));
  auto answer = clean_answer(text.substr(start, end == std::string_view::npos ? end : end - start));
  if (is_abstention(answer)) return out;

  out.answer = std::move(answer);
  out.abstained = false;
  out.confidence = parse_confidence(text);

  auto ambiguity = labelled_number(text, "ambiguity");
  auto complexity = labelled_number(text, "complexity");
  auto ability = labelled_number(text, "ability");
  if (ambiguity && complexity && ability) {
    out.aux_ratings = AuxRatings{*ambiguity, *complexity, *ability};
  }
  return out;
}

std::string_view to_string(RatingLevel level) {
  switch (level) {
    case RatingLevel::kBad:
      return "bad";
    case RatingLevel::kModest:
      return "modest";
    case RatingLevel::kGood:
      return "good";
    case RatingLevel::kExcellent:
      return "excellent";
  }
  return "modest";
}

std::optional<RatingLevel> parse_rating_level(std::string_view word) {
  auto w = text::to_lower(text::trim(word));
  if (w == "bad") return RatingLevel::kBad;
  if (w == "modest") return RatingLevel::kModest;
  if (w == "good") return RatingLevel::kGood;
  if (w == "excellent") return RatingLevel::kExcellent;
  return std::nullopt;
}

double rating_value(RatingLevel level) { return static_cast<int>(level) / 3.0; }

double ParsedRating::mean_value() const {
  return (rating_value(consistency) + rating_value(clarity) + rating_value(conciseness)) / 3.0;
}

ParsedRating parse_rating(std::string_view text) {
  std::string s(text);
  auto aspect = [&](const char* name) -> RatingLevel {
    std::regex re(std::string(name) + R"(\s*:\s*[\W_]*(bad|modest|good|excellent))",
                  std::regex::icase);
    std::smatch m;
    if (!std::regex_search(s, m, re)) {
      throw MalformedRating(std::string("rating reply lacks '") + name + "'");
    }
    return *parse_rating_level(m[1].str());
  };
  ParsedRating out;
  out.consistency = aspect("consistency");
  out.clarity = aspect("clarity");
  out.conciseness = aspect("conciseness");
  auto fpos = text::ifind(text, "factuality:");
  if (fpos != std::string_view::npos) {
    auto rest = text.substr(fpos + 11);
    auto notes = text::trim(rest.substr(0, rest.find('\n')));
    if (!notes.empty()) out.factuality_notes = notes;
  }
  return out;
}

std::optional<ParsedRevision> parse_revision(std::string_view text) {
  auto pos = text::ifind(text, "answer:");
  if (pos == std::string_view::npos) return std::nullopt;
  auto start = pos + 7;
  auto rpos = text::ifind(text, "rationale", start);
  auto answer = clean_answer(text.substr(start, rpos == std::string_view::npos ? rpos : rpos - start));
  if (answer.empty()) return std::nullopt;
  ParsedRevision out{answer, {}};
  if (rpos != std::string_view::npos) {
    auto rest = text.substr(rpos);
    auto colon = rest.find(':');
    out.rationale = text::trim(colon == std::string_view::npos ? rest : rest.substr(colon + 1));
  }
  return out;
}

std::vector<Premise> parse_premises(std::string_view text) {
  std::vector<Premise> out;
  for (const auto& raw : text::split(text, '\n')) {
    std::string_view line = raw;
    auto pos = text::ifind(line, "premise:");
    if (pos == std::string_view::npos) continue;
    auto rest = line.substr(pos + 8);
    Premise p;
    auto bar = rest.rfind('|');
    if (bar != std::string_view::npos) {
      auto marker = text::to_lower(text::trim(rest.substr(bar + 1)));
      p.sure = marker.rfind("sure", 0) == 0;
      rest = rest.substr(0, bar);
    }
    p.text = clean_answer(rest);
    if (!p.text.empty()) out.push_back(std::move(p));
  }
  return out;
}

PremiseVerdict parse_premise_verdict(std::string_view text) {
  auto t = text::to_lower(text);
  if (t.find("contradict") != std::string::npos) return PremiseVerdict::kContradicted;
  if (t.find("unsupported") != std::string::npos || t.find("not supported") != std::string::npos) {
    return PremiseVerdict::kUnknown;
  }
  if (t.find("support") != std::string::npos) return PremiseVerdict::kSupported;
  return PremiseVerdict::kUnknown;
}

std::optional<bool> parse_yes_no(std::string_view text) {
  static const std::regex yes_re(R"(\byes\b)", std::regex::icase);
  static const std::regex no_re(R"(\bno\b)", std::regex::icase);
  std::string s = text::trim(text);
  auto lower = text::to_lower(s);
  if (lower.rfind("yes", 0) == 0) return true;
  if (lower.rfind("no", 0) == 0 && (lower.size() == 2 || !std::isalpha(static_cast<unsigned char>(lower[2])))) {
    return false;
  }
  bool yes = std::regex_search(s, yes_re);
  bool no = std::regex_search(s, no_re);
  if (yes != no) return yes;
  return std::nullopt;
}

std::optional<std::string> parse_follow_up(std::string_view text) {
  auto pos = text::ifind(text, "follow up:");
  if (pos == std::string_view::npos) return std::nullopt;
  auto rest = text.substr(pos + 10);
  auto q = text::trim(rest.substr(0, rest.find('\n')));
  if (q.empty()) return std::nullopt;
  return q;
}

std::string parse_argument(std::string_view text) {
  auto t = text::trim(text);
  if (text::ifind(t, "argument:") == 0) t = text::trim(std::string_view(t).substr(9));
  return t;
}

}  // namespace collabcal
