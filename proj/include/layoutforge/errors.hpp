#pragma once

#include <stdexcept>
#include <string>

namespace layoutforge {

// Base for every error raised by the library. Derived types carry no extra
// state; callers dispatch on the dynamic type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define LAYOUTFORGE_ERROR(Name)          \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  };

LAYOUTFORGE_ERROR(PlacementFailure)
LAYOUTFORGE_ERROR(DegenerateContainer)
LAYOUTFORGE_ERROR(MissingDestination)
LAYOUTFORGE_ERROR(UnknownLabel)
LAYOUTFORGE_ERROR(ShapeMismatch)
LAYOUTFORGE_ERROR(CycleDetected)
LAYOUTFORGE_ERROR(EmptyLayout)
LAYOUTFORGE_ERROR(ZeroVariance)
LAYOUTFORGE_ERROR(NonFiniteLoss)
LAYOUTFORGE_ERROR(NonFiniteObjective)
LAYOUTFORGE_ERROR(UnknownConstraintTarget)
LAYOUTFORGE_ERROR(PreconditionViolation)
LAYOUTFORGE_ERROR(SchemaError)

#undef LAYOUTFORGE_ERROR

}  // namespace layoutforge
