#pragma once

#include <stdexcept>
#include <string>

namespace drivelearn {

/// Malformed or out-of-range user input (files, config, flags). The CLI maps
/// this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : ValidationError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace drivelearn
