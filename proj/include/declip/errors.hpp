#pragma once

#include <stdexcept>
#include <string>

namespace declip {

// Base class for all library errors. The CLI maps subclasses to exit codes:
// usage/config problems -> 1, data problems -> 2, numerical failures -> 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller passed an argument outside the documented domain.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

// A file or stream is missing, malformed, or inconsistent with its header.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

// A computation produced non-finite values or failed to converge where
// convergence is required.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// find_threshold was asked for a clipping level outside the achievable range.
class UnreachableTarget : public InvalidArgument {
 public:
  explicit UnreachableTarget(const std::string& msg) : InvalidArgument(msg) {}
};

// A clipped-region metric was requested but the mask marks no sample clipped.
class NoClippedRegion : public InvalidArgument {
 public:
  explicit NoClippedRegion(const std::string& msg) : InvalidArgument(msg) {}
};

}  // namespace declip
