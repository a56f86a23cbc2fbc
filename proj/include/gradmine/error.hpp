#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gradmine {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidShape : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised when probabilities cannot be formed (all-zero weights, negative mass).
class InvalidDistribution : public Error {
 public:
  using Error::Error;
};

class DegenerateDistribution : public InvalidDistribution {
 public:
  using InvalidDistribution::InvalidDistribution;
};

class InvalidProbability : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

// Non-finite loss during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace gradmine
