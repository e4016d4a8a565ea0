/*
 * Copyright (c) 2026, The tfcw Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tfcw {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument is out of its documented range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Data violates a domain invariant (non-finite coordinates, zero-norm rows, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents. Carries the 1-based line (text formats) or byte
/// offset (binary formats) where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t location, const std::string& what)
      : Error(source + ":" + std::to_string(location) + ": " + what), location_(location) {}

  std::size_t location() const noexcept { return location_; }

 private:
  std::size_t location_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tfcw
