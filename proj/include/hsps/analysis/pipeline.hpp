#pragma once

#include <cstdint>

#include "hsps/detection.hpp"
#include "hsps/electronics.hpp"
#include "hsps/emission.hpp"
#include "hsps/setup.hpp"

namespace hsps::analysis {

struct RunOptions {
  std::uint64_t seed = 1;
  EmissionOptions emission;
  EmissionSink on_emission;   // optional tap on the emitted stream
  DetectionSink on_detection; // optional tap on the detected stream
};

/// Gated and ungated counts from one shared detection stream.
struct RunCounts {
  CountsSummary gated;
  CountsSummary ungated;
};

/// emit -> detect -> count, streamed end to end.
RunCounts simulate_counts(const Setup& setup, const RunOptions& options);

}  // namespace hsps::analysis
