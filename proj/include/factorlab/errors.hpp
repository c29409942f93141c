#pragma once

#include <stdexcept>
#include <string>

namespace factorlab {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define FACTORLAB_ERROR(Name)                               \
  class Name : public Error {                               \
   public:                                                  \
    explicit Name(const std::string& what) : Error(what) {} \
  }

FACTORLAB_ERROR(InvalidAction);
FACTORLAB_ERROR(UnsupportedShape);
FACTORLAB_ERROR(BackendSwitch);
FACTORLAB_ERROR(CapabilityError);
FACTORLAB_ERROR(DegenerateNormalization);
FACTORLAB_ERROR(LookupError);
FACTORLAB_ERROR(InvalidInput);
FACTORLAB_ERROR(ContractError);

#undef FACTORLAB_ERROR

/// Raised when an iterative solver stops before meeting its tolerance.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double residual, int iterations)
      : Error(what), residual(residual), iterations(iterations) {}
  double residual;
  int iterations;
};

}  // namespace factorlab
