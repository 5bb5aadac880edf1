#pragma once

#include <stdexcept>
#include <string>

namespace ctxrescore {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented contract (malformed file, bad config, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A JSONL line could not be parsed or validated.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : ValidationError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// The scorer rejected or failed a request for a non-transport reason.
class ScorerError : public Error {
 public:
  using Error::Error;
};

/// context + target exceeds the scorer's maximum sequence length.
class LengthError : public ScorerError {
 public:
  using ScorerError::ScorerError;
};

/// Remote scorer unreachable or returned a transport-level failure. Retriable.
class TransportError : public ScorerError {
 public:
  using ScorerError::ScorerError;
};

}  // namespace ctxrescore
