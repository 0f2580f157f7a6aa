#pragma once

#include <stdexcept>
#include <string>

namespace pedsplat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters, thresholds or configuration files. Maps to CLI exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Missing, malformed or inconsistent input data. Maps to CLI exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

/// Degenerate geometric input (point on the camera plane, non-positive depth, ...).
class GeometryError : public Error {
public:
    using Error::Error;
};

/// A non-finite value appeared during optimization.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace pedsplat
