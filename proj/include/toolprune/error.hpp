#pragma once

#include <stdexcept>
#include <string>

namespace toolprune {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Precondition violation or bad configuration value.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (JSONL rows, report files).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

// Chat endpoint unreachable or persistently failing after retries.
class EndpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace toolprune
