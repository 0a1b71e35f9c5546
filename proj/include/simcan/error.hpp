#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace simcan {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. Carries the source location of the offending token.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, std::size_t column, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        source_(std::move(source)),
        line_(line),
        column_(column) {}

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::string source_;
  std::size_t line_;
  std::size_t column_;
};

/// Well-formed input that violates a model invariant (overlaps, bit budget, duplicates).
class SemanticError : public Error {
 public:
  using Error::Error;
};

/// A message or signal name that does not resolve.
class LookupError : public Error {
 public:
  enum class Level { message, signal };

  LookupError(Level level, const std::string& what) : Error(what), level_(level) {}

  Level level() const { return level_; }

 private:
  Level level_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

/// Frame id with no message in the database.
class UnmappedFrameError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace simcan
