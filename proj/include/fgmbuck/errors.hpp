#pragma once

#include <stdexcept>
#include <string>

namespace fgmbuck {

// Every error carries the module that raised it so CLI messages can be
// traced back without a stack.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error("[" + module + "] " + what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid user configuration (schema, geometry placement, mesh resolution).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Degenerate element geometry or a quadrature point on a singularity.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Broken internal invariant; indicates a bug rather than bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// Constrained stiffness is not positive definite.
class ConstraintError : public Error {
 public:
  using Error::Error;
};

/// The reference load never produces a positive critical factor.
class NoBucklingError : public Error {
 public:
  using Error::Error;
};

}  // namespace fgmbuck
