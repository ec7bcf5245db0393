#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace circdet {

/// Base of every error raised by the library. The CLI maps IoError to exit
/// code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateQuad : public Error {
 public:
  using Error::Error;
};

class NonConvexQuad : public Error {
 public:
  using Error::Error;
};

class NotRectangular : public Error {
 public:
  using Error::Error;
};

class InvalidAnchor : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

class NonPositive : public Error {
 public:
  using Error::Error;
};

class DegenerateBox : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class ClassOutOfRange : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyResult : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public Error {
 public:
  using Error::Error;
};

class CorruptFile : public Error {
 public:
  using Error::Error;
};

class MissingImage : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A line of an annotation or detection file that could not be parsed.
/// line_number is 1-based; 0 means "not known" (single-line parse).
class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line_number, const std::string& what)
      : Error(line_number == 0 ? what
                               : "line " + std::to_string(line_number) + ": " + what),
        line_number_(line_number),
        reason_(what) {}

  std::size_t line_number() const noexcept { return line_number_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_number_;
  std::string reason_;
};

}  // namespace circdet
