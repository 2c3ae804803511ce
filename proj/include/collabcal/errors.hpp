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

#include <stdexcept>
#include <string>

namespace collabcal {

// Base of every error raised by the library. Callers that only want to
// distinguish "ours" from std failures can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// backend
class TransportError : public Error {
 public:
  using Error::Error;
};
class AuthError : public Error {
 public:
  using Error::Error;
};
class MalformedResponse : public Error {
 public:
  using Error::Error;
};
class CapabilityError : public Error {
 public:
  using Error::Error;
};
class InvalidRequest : public Error {
 public:
  using Error::Error;
};

// prompts
class MissingPlaceholder : public Error {
 public:
  MissingPlaceholder(std::string template_name, std::string placeholder)
      : Error("template '" + template_name + "' is missing variable '" +
              placeholder + "'"),
        placeholder_(std::move(placeholder)) {}
  const std::string& placeholder() const { return placeholder_; }

 private:
  std::string placeholder_;
};
class UnknownTemplate : public Error {
 public:
  using Error::Error;
};
class MalformedRating : public Error {
 public:
  using Error::Error;
};

// confidence
class EmptySequence : public Error {
 public:
  using Error::Error;
};
class OutOfRangeProb : public Error {
 public:
  using Error::Error;
};
class NoSurvivors : public Error {
 public:
  using Error::Error;
};

// ensemble
class AllAbstained : public Error {
 public:
  using Error::Error;
};
class JudgeError : public Error {
 public:
  using Error::Error;
};

// metrics
class EmptyInput : public Error {
 public:
  using Error::Error;
};

// cli
class ConfigError : public Error {
 public:
  using Error::Error;
};
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};
class DuplicateId : public Error {
 public:
  explicit DuplicateId(const std::string& id)
      : Error("duplicate id '" + id + "'"), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};
class EmptyReferences : public Error {
 public:
  explicit EmptyReferences(const std::string& id)
      : Error("record '" + id + "' has no reference answers"), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};
class NoTranscripts : public Error {
 public:
  using Error::Error;
};

}  // namespace collabcal
