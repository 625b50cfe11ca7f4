#pragma once

#include <stdexcept>
#include <string>

namespace efrl {

/// A field contains non-finite values or the run exceeded the energy bound.
class BlowUpError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent run configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Grid, layer or vector dimensions that do not match.
class ShapeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed, truncated or incompatible file.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace efrl
