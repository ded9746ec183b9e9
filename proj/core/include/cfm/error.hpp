#pragma once

#include <stdexcept>
#include <string>

namespace cfm {

/// Transform length is not a power of two.
class LengthError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Parameters violate a documented precondition (shape, level count, ranges).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operands disagree in size (pattern N vs scene N, record M vs pattern M).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data is numerically invalid (negative scene, nonfinite readings).
class DataError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// File cannot be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File contents do not follow the container format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cfm
