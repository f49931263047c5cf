#include "hsps/analysis/pipeline.hpp"

namespace hsps::analysis {

RunCounts simulate_counts(const Setup& setup, const RunOptions& options) {
  setup.validate();
  const SourceConfig& src = setup.source;
  const double run_ns = src.integration_time_s * 1.0e9;

  GateConfig gated = setup.gate;
  gated.gating_enabled = true;
  GateConfig ungated = setup.gate;
  ungated.gating_enabled = false;
  CoincidenceCounter gated_counter(gated, src.rep_rate_hz);
  CoincidenceCounter ungated_counter(ungated, src.rep_rate_hz);

  Detector detector(setup.trigger_arm, setup.signal_arm, DetectOptions{options.seed, run_ns},
                    [&](const DetectionEvent& e) {
                      if (options.on_detection) options.on_detection(e);
                      gated_counter.push(e);
                      ungated_counter.push(e);
                    });

  emit_stream(src, options.seed, options.emission, [&](std::span<const EmissionRecord> chunk) {
    if (options.on_emission) options.on_emission(chunk);
    detector.push(chunk);
    gated_counter.advance_to(detector.watermark());
    ungated_counter.advance_to(detector.watermark());
  });
  detector.finish();
  gated_counter.flush();
  ungated_counter.flush();

  return {gated_counter.summary(src.integration_time_s),
          ungated_counter.summary(src.integration_time_s)};
}

}  // namespace hsps::analysis
