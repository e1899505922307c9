#pragma once

#include <stdexcept>
#include <string>

namespace lmmsel {

/// Invalid input data, configuration, or schema.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A group design is rank-deficient, so the fractional prior is undefined.
class IdentifiabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced a value outside its mathematically valid range.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A persisted file could not be parsed; carries the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, long line)
      : std::runtime_error(msg + " at line " + std::to_string(line)), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

}  // namespace lmmsel
