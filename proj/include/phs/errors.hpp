#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phs {

// Bad configuration or file contents supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure produced a non-finite value. `index()` is the step,
// sample or epoch where it happened.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t index)
      : std::runtime_error(what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace phs
