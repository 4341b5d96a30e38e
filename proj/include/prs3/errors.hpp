#pragma once

#include <stdexcept>
#include <string>

namespace prs3 {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration parameter is missing, malformed or out of range.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error("config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// The geometry cannot be assembled (e.g. the link cannot span the radii gap).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// A stiffness coefficient handed to a stiffness routine is not usable.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Newton iteration on the closure residuals did not converge.
class ClosureError : public Error {
 public:
  ClosureError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// A spherical-joint center lies farther from its revolute axis than the link length.
class UnreachableError : public Error {
 public:
  UnreachableError(const std::string& what, int limb) : Error(what), limb_(limb) {}
  int limb() const noexcept { return limb_; }

 private:
  int limb_;
};

enum class SingularityKind { closure, actuation, constraint, parasitic };

class SingularityError : public Error {
 public:
  SingularityError(SingularityKind kind, const std::string& what) : Error(what), kind_(kind) {}
  SingularityKind kind() const noexcept { return kind_; }

 private:
  SingularityKind kind_;
};

/// Y-X-Z Euler extraction hit gimbal lock.
class DegenerateDecompositionError : public Error {
 public:
  using Error::Error;
};

/// A twist handed to the actuation map violates the limb constraints.
class ConstraintViolationError : public Error {
 public:
  ConstraintViolationError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time, double residual)
      : Error(what), time_(time), residual_(residual) {}
  double time() const noexcept { return time_; }
  double residual() const noexcept { return residual_; }

 private:
  double time_;
  double residual_;
};

}  // namespace prs3
