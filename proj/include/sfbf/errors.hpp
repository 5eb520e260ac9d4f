// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace sfbf {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or dimensionally inconsistent input data.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A parameter outside its admissible range (step size, modulus, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A function evaluated outside its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Random sampling produced no usable data.
class SamplingError : public Error {
 public:
  using Error::Error;
};

/// The requested check is not supported for the given oracle or inputs.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// An operation that needs accumulated state was called too early.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration, CSV or JSON input.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Iterates left the finite range or exceeded the divergence threshold.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace sfbf
