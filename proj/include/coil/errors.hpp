#pragma once

#include <stdexcept>
#include <string>

namespace coil {

/// Invalid input or violated precondition (maps to CLI exit code 2).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed dataset / log / checkpoint file. Carries the 1-based line number
/// when the format is line oriented (0 otherwise).
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Non-finite parameters after a gradient step (exit code 3).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError() : std::runtime_error("divergence") {}
};

/// Raised by select_curriculum when there is nothing left to pick; the
/// curriculum loop treats it as its termination signal.
class PoolExhausted : public std::runtime_error {
 public:
  PoolExhausted() : std::runtime_error("pool exhausted") {}
};

}  // namespace coil
