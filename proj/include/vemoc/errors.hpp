#pragma once

#include <stdexcept>
#include <string>

namespace vemoc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A problem definition is malformed (dimension or shape mismatch).
class DefinitionError : public Error {
 public:
  using Error::Error;
};

/// A callback produced a non-finite value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The adaptive integrator could not take a step above h_min.
class StepFailure : public Error {
 public:
  using Error::Error;
};

/// The working-set loop exceeded its pass bound.
class CyclingError : public Error {
 public:
  using Error::Error;
};

/// Consistency failure inside the library (stale tables, asymmetric M).
class InternalError : public Error {
 public:
  using Error::Error;
};

/// An input file does not match the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace vemoc
