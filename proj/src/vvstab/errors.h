#pragma once

#include <stdexcept>
#include <string>

namespace vvstab {

// Non-radial topology: cycles, disconnected nodes, duplicate lines.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid scenario parameters detected at load or construction time.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the documented domain of a pure function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class CertificateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, int iterations)
      : std::runtime_error(what), iterations_(iterations) {}
  int iterations() const { return iterations_; }

 private:
  int iterations_;
};

}  // namespace vvstab
