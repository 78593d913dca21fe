#pragma once

#include <stdexcept>
#include <string>

namespace dbtab {

// Base for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class CaptureError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class UnsafeConstraintError : public Error {
 public:
  using Error::Error;
};

// A configured cap (branches, formulas, grounding size, universe size) was hit.
class ResourceLimitError : public Error {
 public:
  using Error::Error;
};

}  // namespace dbtab
