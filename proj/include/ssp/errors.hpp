#pragma once

#include <stdexcept>
#include <string>

namespace ssp {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// I - xi*A (or the ARK resolvent) is numerically singular.
class SingularResolvent : public Error {
 public:
  using Error::Error;
};

class SingularJacobian : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, int stage = -1) : Error(what), stage_(stage) {}
  int stage() const { return stage_; }

 private:
  int stage_;
};

class NonpositiveState : public Error {
 public:
  using Error::Error;
};

class InfiniteRadius : public Error {
 public:
  using Error::Error;
};

class StepUnderflow : public Error {
 public:
  using Error::Error;
};

class ReferenceNotConverged : public Error {
 public:
  using Error::Error;
};

class TimeGridMismatch : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NoInvariants : public Error {
 public:
  using Error::Error;
};

class UnknownMethod : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Wraps a step failure with the step index and time at which it happened.
class StepFailure : public Error {
 public:
  StepFailure(const std::string& what, long step, double time)
      : Error(what), step_(step), time_(time) {}
  long step() const { return step_; }
  double time() const { return time_; }

 private:
  long step_;
  double time_;
};

}  // namespace ssp
