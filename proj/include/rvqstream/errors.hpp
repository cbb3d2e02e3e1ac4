#pragma once

#include <stdexcept>
#include <string>

namespace rvqstream {

// Base class for every error this library raises deliberately.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Vector/frame dimension does not match the codebook or stack dimension.
class DimensionError : public Error {
  public:
    using Error::Error;
};

// A code index is out of range for its layer.
class CodeRangeError : public Error {
  public:
    using Error::Error;
};

// Training corpus smaller than the requested codebook.
class InsufficientDataError : public Error {
  public:
    using Error::Error;
};

// Invalid configuration value (zero sizes, empty first packet, bad taps, ...).
class ConfigError : public Error {
  public:
    using Error::Error;
};

// A step model emitted an index outside its declared codebook range.
class ModelContractError : public Error {
  public:
    using Error::Error;
};

// Session hit the hard step cap before its stop rule fired.
class MaxStepsExceededError : public Error {
  public:
    using Error::Error;
};

// Simulation was asked for fewer tokens than one packet needs.
class NoPacketError : public Error {
  public:
    using Error::Error;
};

// Malformed or wrong-version file.
class FormatError : public Error {
  public:
    using Error::Error;
};

// Filesystem / OS level failure.
class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace rvqstream
