#pragma once

#include <stdexcept>
#include <string>

namespace orlicz {

/// Bad input: violated precondition, malformed configuration, out-of-domain argument.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical procedure could not deliver its certified accuracy.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace orlicz
