#include "hsps/setup.hpp"

#include "hsps/errors.hpp"

namespace hsps {

void Setup::validate() const {
  source.validate();
  trigger_arm.validate();
  signal_arm.validate();
  if (signal_arm.slit) throw ValidationError("the signal arm has no slit filter");
  gate.validate();
}

}  // namespace hsps
