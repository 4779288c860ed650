#pragma once

#include <stdexcept>
#include <string>

namespace rlx {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a documented invariant (bad circles, empty circle
/// measure, malformed config, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a mathematical function, e.g. a point
/// that is not in the open upper half plane.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A truncated series failed its measured geometric-decay test.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Enumeration would exceed the configured element cap.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// The numerical kernel of a period matrix is not one-dimensional.
class DegenerateKernel : public Error {
 public:
  using Error::Error;
};

/// The kernel vector of a period matrix has entries of both signs.
class NonPositiveKernel : public Error {
 public:
  using Error::Error;
};

class NotSplittable : public Error {
 public:
  using Error::Error;
};

}  // namespace rlx
