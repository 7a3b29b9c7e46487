#ifndef KBQGEN_ERROR_HPP
#define KBQGEN_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kbqgen {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input at a known location. line() is 1-based, 0 when the
// problem is not tied to a single line (e.g. an empty file).
class ParseError : public Error {
 public:
  ParseError(const std::string &what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Raised by suggestion providers when a single query cannot be served.
// The expansion loop treats it as skippable.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace kbqgen

#endif
