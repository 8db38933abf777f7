#pragma once

#include <stdexcept>
#include <string>

namespace maskpath {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that must agree do not (image sizes, latent lengths, regions out of bounds).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input values violate a documented constraint (non-finite entries, bad config values).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Operation parameters out of range, e.g. a spring order not smaller than the path length.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A gradient was requested from a generator that is forward-only.
class UnsupportedGradientError : public Error {
 public:
  using Error::Error;
};

/// The external adapter process misbehaved or went away.
class AdapterError : public Error {
 public:
  using Error::Error;
};

}  // namespace maskpath
