/*
 * Copyright 2026 The fedcd Authors
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

#include <stdexcept>
#include <string>

namespace fedcd {

enum class ErrorKind {
  invalid_argument = 1,
  config = 2,
  io = 3,
  runtime = 4,
};

/// Library-wide exception. The kind maps one-to-one onto the C API status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error invalid_argument(const std::string& what) { return {ErrorKind::invalid_argument, what}; }
inline Error config_error(const std::string& what) { return {ErrorKind::config, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::io, what}; }
inline Error runtime_error(const std::string& what) { return {ErrorKind::runtime, what}; }

}  // namespace fedcd
