#pragma once

#include <stdexcept>
#include <string>

namespace handkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or configuration, detected before any work is done.
class ValidationError : public Error
{
public:
  using Error::Error;
};

/// Input data that violates a precondition (non-finite values, degenerate
/// geometry, malformed files).
class DataError : public Error
{
public:
  using Error::Error;
};

} // namespace handkit
