#pragma once

#include <stdexcept>
#include <string>

namespace hatebench {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: corpus records, configuration, model files.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Shapes that do not agree (matrix columns, fitted dimension, row counts).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A file could not be opened, created or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hatebench
