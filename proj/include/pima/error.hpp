#pragma once

#include <stdexcept>
#include <string>

namespace pima {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform for the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN/Inf reached an operation, or an operation left its numeric domain.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or record.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or unsatisfiable request.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Receives non-fatal diagnostics. The default sink writes to stderr.
using WarningSink = void (*)(const std::string& message);

void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace pima
