#pragma once

#include <stdexcept>
#include <string>

namespace lbseg {

// Base of every exception the library throws. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes do not agree with an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Input value outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration (kernel sizes, pyramid levels, unknown keys, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed file on disk.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Caller broke an API precondition (e.g. backward from a non-scalar).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Metric requested on an empty confusion matrix.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace lbseg
