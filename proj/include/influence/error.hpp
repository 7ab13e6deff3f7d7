#pragma once

#include <stdexcept>
#include <string>

namespace influence {

// Base for every error thrown by the library. The C API maps each subclass
// onto a distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Shapes of params/observations disagree with the ModelSpec.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// A designated probability row/vector is not stochastic.
class StochasticityViolation : public Error {
 public:
  using Error::Error;
};

// Every state assigns zero likelihood to an observation.
class DegenerateEvidence : public Error {
 public:
  DegenerateEvidence(std::size_t t, std::size_t chain)
      : Error("degenerate evidence at t=" + std::to_string(t + 1) +
              ", chain=" + std::to_string(chain + 1)),
        time(t),
        chain(chain) {}
  std::size_t time;
  std::size_t chain;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line(line) {}
  std::size_t line;
};

class CapacityExceeded : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace influence
