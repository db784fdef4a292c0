#pragma once

#include <stdexcept>
#include <string>

namespace tensoropt {

/* Base class for all errors raised by the library.  Every failure mode that
 * is part of an operation's contract maps to one of the subclasses below so
 * callers can react to the category without parsing messages. */
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/* A derivative order (or other capability) was requested that the oracle
 * does not provide. */
class CapabilityError : public Error {
 public:
  explicit CapabilityError(const std::string& what) : Error(what) {}
};

/* An argument violates a precondition (wrong dimension, non-positive
 * regularization, malformed input file, ...). */
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

/* A numerical routine could not reach its target (no bracket found,
 * root finder stagnated, overflow). */
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what) {}
};

/* The regularized model turned out to be non-convex, which signals that the
 * regularization weight H is too small for the function at hand. */
class ModelConvexityError : public Error {
 public:
  explicit ModelConvexityError(const std::string& what) : Error(what) {}
};

/* The step-size search of the accelerated driver ran out of its iteration
 * budget without finding an acceptable value.  Carries the trial history in
 * the message for diagnosis. */
class BracketFailure : public Error {
 public:
  explicit BracketFailure(const std::string& what) : Error(what) {}
};

/* A gradient was requested at a point where the (inexact) model is not
 * differentiable (step s = 0 with a first-order error bound present). */
class NonsmoothPointError : public Error {
 public:
  explicit NonsmoothPointError(const std::string& what) : Error(what) {}
};

/* Two independent solvers failed to agree on a reference solution. */
class CertificationError : public Error {
 public:
  explicit CertificationError(const std::string& what) : Error(what) {}
};

}  // namespace tensoropt
