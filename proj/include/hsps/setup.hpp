#pragma once

#include "hsps/detection.hpp"
#include "hsps/electronics.hpp"
#include "hsps/emission.hpp"

namespace hsps {

/// Everything needed to simulate one run of the apparatus.
struct Setup {
  SourceConfig source;
  ArmConfig trigger_arm;
  ArmConfig signal_arm;
  GateConfig gate;

  void validate() const;
};

}  // namespace hsps
