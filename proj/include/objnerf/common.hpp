// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace objnerf {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller passed something structurally wrong (shape, range, arity).
struct ArgumentError : Error {
  explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

// A (cos, sin) pair or translation that cannot form a valid camera pose.
struct InvalidPoseError : ArgumentError {
  explicit InvalidPoseError(const std::string& msg) : ArgumentError(msg) {}
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Config file / key validation failures (CLI exits with status 2 on these).
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Malformed manifest or container contents; carries a position when known.
struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// A dataset record that should be skipped (e.g. empty mask), not a fatal error.
struct RecordSkipError : Error {
  explicit RecordSkipError(const std::string& msg) : Error(msg) {}
};

}  // namespace objnerf
