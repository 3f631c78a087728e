#ifndef FTDF_ERRORS_HPP
#define FTDF_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ftdf {

// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid parameter or configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input data. Carries the location (line number or byte offset)
// inside the message.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures (missing files, short writes).
class IoError : public Error {
 public:
  using Error::Error;
};

// Non-monotone timestamps or otherwise broken event streams.
class StreamError : public Error {
 public:
  using Error::Error;
};

// Grid allocation would exceed the configured memory budget.
class AllocationError : public Error {
 public:
  AllocationError(std::uint64_t required_bytes, std::uint64_t available_bytes)
      : Error("grid allocation requires " + std::to_string(required_bytes) +
              " bytes but the memory budget is " + std::to_string(available_bytes) + " bytes"),
        required(required_bytes),
        available(available_bytes) {}

  std::uint64_t required;
  std::uint64_t available;
};

// Too few associated pose pairs to evaluate a trajectory.
class InsufficientOverlapError : public Error {
 public:
  using Error::Error;
};

}  // namespace ftdf

#endif
