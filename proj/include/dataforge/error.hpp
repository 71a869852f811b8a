#pragma once

#include <stdexcept>
#include <string>

namespace dataforge {

// Base for every error the toolkit raises. The CLI maps the subclasses to
// exit codes: ValidationError -> 1, IoError -> 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dataforge
