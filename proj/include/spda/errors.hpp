#pragma once

#include <stdexcept>
#include <string>

namespace spda {

/// Shape or size disagreement between tensors / layers.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration (bad file, bad value, missing key, out-of-range epoch).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed on-disk data (IDX header, checkpoint).
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values showed up where finite ones are required.
struct NumericError : std::runtime_error {
  NumericError(const std::string& what, long epoch = -1)
      : std::runtime_error(what), epoch(epoch) {}
  long epoch;
};

/// API used out of order (e.g. backward before any forward).
struct StateError : std::logic_error {
  explicit StateError(const std::string& what) : std::logic_error(what) {}
};

/// Convex oracle failed to reach the requested tolerance.
struct OracleError : std::runtime_error {
  explicit OracleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spda
