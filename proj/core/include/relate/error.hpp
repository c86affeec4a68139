#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace relate {

// Base for every error the library raises. Callers that only care about
// "bad input" vs "numerical trouble" can catch Error and NumericalError.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class UnknownSegmentError : public Error {
 public:
  UnknownSegmentError(std::string segment, std::string form)
      : Error("unknown segment '" + segment + "' in form '" + form + "'"),
        segment_(std::move(segment)),
        form_(std::move(form)) {}
  const std::string& segment() const noexcept { return segment_; }
  const std::string& form() const noexcept { return form_; }

 private:
  std::string segment_;
  std::string form_;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class NewickError : public Error {
 public:
  NewickError(const std::string& what, std::size_t position)
      : Error("newick position " + std::to_string(position) + ": " + what),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// Raised when a likelihood evaluation underflows or produces a non-finite
// value. The CLI maps this to exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace relate
