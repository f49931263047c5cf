#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>

#include "hsps/detection.hpp"

namespace hsps {

/// Gate pulse train and coincidence logic. Times are relative to the pump
/// pulse train, which fires at multiples of the period starting at t = 0.
struct GateConfig {
  double gate_width_ns = 3.0;
  double gate_delay_ns = -1.5;  // window centered on the prompt arrival
  double coincidence_window_ns = 3.0;
  bool gating_enabled = true;

  void validate() const;
};

struct CountsSummary {
  double integration_time_s = 0.0;
  std::uint64_t s_trigger = 0;
  std::uint64_t s_signal = 0;
  std::uint64_t coincidences = 0;
  double accidentals_analytic = 0.0;

  bool operator==(const CountsSummary&) const = default;
};

/// True iff the event phase within the pulse period lies in
/// [gate_delay, gate_delay + gate_width), wrapping across period boundaries.
bool gate_pass(double event_time_ns, double rep_rate_hz, const GateConfig& gate);

/// Uncorrelated same-pulse pileup expectation for a pulsed source:
/// s_trigger * s_signal / (rep_rate * integration_time).
double accidentals_analytic(double s_trigger, double s_signal, double rep_rate_hz,
                            double integration_time_s);

/// Streaming S1/S2/C counters.
///
/// Triggers pass the gate (when enabled) and are then paired one-to-one with
/// signal clicks within +/- coincidence_window, greedily in time order. Each
/// channel must be pushed in nondecreasing time; the two channels may be fed
/// in any interleaving, and events are only resolved once both channels have
/// advanced past them (or on flush).
class CoincidenceCounter {
 public:
  CoincidenceCounter(GateConfig gate, double rep_rate_hz);

  void push_trigger(double time_ns);
  void push_signal(double time_ns);
  void push(const DetectionEvent& event);

  /// Promise that no later push on either channel is earlier than `time_ns`;
  /// lets queued events resolve while one channel is quiet.
  void advance_to(double time_ns);

  /// Resolves all queued events. Further pushes remain allowed.
  void flush();

  std::uint64_t s_trigger() const { return s_trigger_; }
  std::uint64_t s_signal() const { return s_signal_; }
  std::uint64_t coincidences() const { return coincidences_; }

  CountsSummary summary(double integration_time_s) const;

 private:
  void drain(bool all);
  void on_trigger(double t);
  void on_signal(double t);

  GateConfig gate_;
  double rep_rate_hz_;
  std::deque<double> trigger_in_;
  std::deque<double> signal_in_;
  std::optional<double> last_trigger_;
  std::optional<double> last_signal_;
  double horizon_ = -INFINITY;
  std::deque<double> open_triggers_;  // gated, unmatched
  std::deque<double> open_signals_;   // unmatched
  std::uint64_t s_trigger_ = 0;
  std::uint64_t s_signal_ = 0;
  std::uint64_t coincidences_ = 0;
};

/// Counts two complete, time-ordered streams. Throws ValidationError on
/// unordered input.
CountsSummary count_run(std::span<const double> trigger_ns, std::span<const double> signal_ns,
                        const GateConfig& gate, double rep_rate_hz, double integration_time_s);

CountsSummary count_run(const DetectedStreams& streams, const GateConfig& gate,
                        double rep_rate_hz, double integration_time_s);

}  // namespace hsps
