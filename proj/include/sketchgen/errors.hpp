#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sketchgen {

/// Two sketches (or a sketch and a frequency matrix) built under different
/// frequency draws were combined.
class IncompatibleSketchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A binary file has a bad magic, version, or is truncated.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric check failed (gradient mismatch, non-finite result).
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A text input (CSV) failed to parse; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, std::uint64_t line, const std::string& what)
      : std::runtime_error(path + " line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::uint64_t line() const { return line_; }

 private:
  std::uint64_t line_;
};

}  // namespace sketchgen
