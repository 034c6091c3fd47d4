#pragma once

#include <stdexcept>
#include <string>

namespace muxsim {

// Argument outside the mathematical domain of an operation (negative power, xi >= 1, ...).
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A detected rate at or above 1/d: no finite true rate reproduces it.
class saturation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A closed form produced a value outside its valid range (usually a transcription bug).
class consistency_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class routing_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class fit_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace muxsim
