#pragma once

#include <stdexcept>
#include <string>

namespace pneusleeve {

// Base for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument fell outside its documented range.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A caller-supplied function violated its contract (e.g. attenuation
// factors outside [0, 1]).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Too few samples to pose the requested problem.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// The data admits no unique answer (all abscissae equal, zero variance).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

// The requested quantity is undefined for these inputs (zero denominator).
class UndefinedValueError : public Error {
 public:
  using Error::Error;
};

// A searched-for feature is absent (e.g. no step transition in a trace).
class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Motion segmentation found no usable rise/fall cycle.
class SegmentationError : public Error {
 public:
  using Error::Error;
};

// Bad or inconsistent configuration (missing MVC entry, rate mismatch,
// malformed lever geometry, missing channel).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A required powered/unpowered pairing (or similar) is missing.
class IncompleteDataError : public Error {
 public:
  using Error::Error;
};

// Structural failure reading a file. `line` is 1-based; 0 = whole file.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

// A parsed value violated a range invariant.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::size_t line = 0)
      : Error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

}  // namespace pneusleeve
