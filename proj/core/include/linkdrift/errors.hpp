#pragma once

#include <stdexcept>
#include <string>

namespace linkdrift {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed topology document, unknown node reference or bad link length.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// No data center is reachable from a client over the surviving graph.
class NoDcError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared in a solver state or forward pass.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Wraps a failure inside the experiment pipeline with the stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace linkdrift
