#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nlevy {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A moment integral such as ∫_{|z|>1} |z| F(dz) is infinite.
class DivergentMoment : public Error {
 public:
  using Error::Error;
};

/// The small-jump Taylor term needs f''(0) but the function does not provide it.
class MissingSecondDerivative : public Error {
 public:
  using Error::Error;
};

class CflViolation : public Error {
 public:
  CflViolation(double dt, double bound)
      : Error("time step " + std::to_string(dt) + " exceeds CFL bound " + std::to_string(bound)),
        dt_(dt),
        bound_(bound) {}
  double dt() const noexcept { return dt_; }
  double bound() const noexcept { return bound_; }

 private:
  double dt_;
  double bound_;
};

class NonFiniteValue : public Error {
 public:
  NonFiniteValue(std::size_t step, std::size_t node)
      : Error("non-finite value at step " + std::to_string(step) + ", node " + std::to_string(node)),
        step_(step),
        node_(node) {}
  std::size_t step() const noexcept { return step_; }
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t step_;
  std::size_t node_;
};

/// The triplet family violates the integrability / small-jump conditions the
/// PIDE theory needs, or a check was asked of an unsuitable family.
class ConditionViolation : public Error {
 public:
  using Error::Error;
};

class OutOfHorizon : public Error {
 public:
  using Error::Error;
};

/// Malformed run configuration; the message names the offending key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlevy
