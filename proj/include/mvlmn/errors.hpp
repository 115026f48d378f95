#pragma once

#include <stdexcept>
#include <string>

namespace mvlmn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(const std::string& what, double smallest_eigenvalue)
      : Error(what), smallest_eigenvalue_(smallest_eigenvalue) {}
  double smallest_eigenvalue() const noexcept { return smallest_eigenvalue_; }

 private:
  double smallest_eigenvalue_;
};

/// Dimension/aspect-ratio regime not covered, e.g. inverting S with p >= n-1.
class RegimeError : public Error {
 public:
  using Error::Error;
};

class ZeroVector : public Error {
 public:
  using Error::Error;
};

class UnsupportedMixing : public Error {
 public:
  using Error::Error;
};

class AccuracyNotMet : public Error {
 public:
  AccuracyNotMet(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// Malformed model, matrix or configuration file.
class ParseError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Failure to read or write a file.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvlmn
