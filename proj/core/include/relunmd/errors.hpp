#ifndef RELUNMD_ERRORS_HPP
#define RELUNMD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace relunmd {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad argument values detected before any computation runs.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Incompatible matrix shapes; the message carries both shapes.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A linear system that must be solvable is numerically singular.
class RankDeficiencyError : public Error {
public:
  using Error::Error;
};

/// File-format problems; the message carries the path and a position.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace relunmd

#endif
