#pragma once

#include <span>
#include <vector>

#include "hsps/analysis/pipeline.hpp"
#include "hsps/setup.hpp"

namespace hsps::analysis {

struct KlyshkoRow {
  double trigger_transmittance = 0.0;
  CountsSummary counts;  // gating per the setup's gate
  double efficiency = 0.0;
  double sigma = 0.0;
  double analytic = 0.0;  // signal-arm transmittance times coincidence capture
};

/// Conditional efficiency over a sweep of trigger-arm transmittances. Each
/// point simulates enough time to generate `pairs_per_point` pairs on
/// average. Requires a background-free setup with mean pairs per pulse at
/// most 1e-3.
std::vector<KlyshkoRow> klyshko_check(const Setup& setup, std::span<const double> trigger_transmittances,
                                      double pairs_per_point, const RunOptions& options,
                                      unsigned threads = 1);

}  // namespace hsps::analysis
