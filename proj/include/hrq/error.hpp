#pragma once

#include <stdexcept>
#include <string>

namespace hrq {

// Base class for all library errors. Subclasses map onto CLI exit codes:
// validation-type errors exit 2, numeric faults exit 3, format/version exit 4.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration value (bad dimension, tau <= 0, alpha out of range, ...).
class ConfigError : public Error {
  public:
    using Error::Error;
};

// Array/vector dimension mismatch.
class ShapeError : public Error {
  public:
    using Error::Error;
};

// Out-of-range code or target index.
class IndexError : public Error {
  public:
    using Error::Error;
};

// API misuse (empty corpus, non-scalar backward root, ...).
class UsageError : public Error {
  public:
    using Error::Error;
};

// Dataset does not support the requested operation (too few points, ...).
class DataError : public Error {
  public:
    using Error::Error;
};

// Non-finite value encountered; message carries the offending step when known.
class NumericError : public Error {
  public:
    using Error::Error;
};

// Unreadable or version-incompatible file.
class FormatError : public Error {
  public:
    using Error::Error;
};

} // namespace hrq
