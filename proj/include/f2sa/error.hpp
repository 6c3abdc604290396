#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace f2sa {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

/// Non-finite or diverging iterate. Carries the outer iteration and, for
/// inner-loop failures, the inner step index (-1 otherwise).
class NumericFailure : public Error {
 public:
  NumericFailure(const std::string& what, long k = -1, long t = -1)
      : Error(decorate(what, k, t)), k_(k), t_(t) {}

  long k() const { return k_; }
  long t() const { return t_; }

 private:
  static std::string decorate(const std::string& what, long k, long t) {
    std::string s = what;
    if (k >= 0) s += " (k=" + std::to_string(k);
    if (k >= 0 && t >= 0) s += ", t=" + std::to_string(t);
    if (k >= 0) s += ")";
    return s;
  }
  long k_;
  long t_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace f2sa
