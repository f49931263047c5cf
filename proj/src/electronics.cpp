#include "hsps/electronics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "hsps/errors.hpp"

namespace hsps {

void GateConfig::validate() const {
  if (!(gate_width_ns > 0.0)) throw ValidationError("gate_width_ns must be > 0");
  if (!(coincidence_window_ns > 0.0)) throw ValidationError("coincidence_window_ns must be > 0");
  if (!std::isfinite(gate_delay_ns)) throw ValidationError("gate_delay_ns must be finite");
}

bool gate_pass(double event_time_ns, double rep_rate_hz, const GateConfig& gate) {
  const double period = 1.0e9 / rep_rate_hz;
  if (gate.gate_width_ns >= period) return true;
  double phase = std::fmod(event_time_ns - gate.gate_delay_ns, period);
  if (phase < 0.0) phase += period;
  return phase < gate.gate_width_ns;
}

double accidentals_analytic(double s_trigger, double s_signal, double rep_rate_hz,
                            double integration_time_s) {
  if (s_trigger < 0.0 || s_signal < 0.0 || rep_rate_hz < 0.0 || integration_time_s < 0.0)
    throw ValidationError("accidentals_analytic: arguments must be >= 0");
  const double pulses = rep_rate_hz * integration_time_s;
  if (pulses > 0.0 && pulses < 1.0)
    throw ValidationError("accidentals_analytic: run must span at least one pulse");
  if (s_trigger <= 0.0 || s_signal <= 0.0 || pulses <= 0.0) return 0.0;
  return s_trigger * s_signal / pulses;
}

CoincidenceCounter::CoincidenceCounter(GateConfig gate, double rep_rate_hz)
    : gate_(gate), rep_rate_hz_(rep_rate_hz) {
  gate_.validate();
  if (!(rep_rate_hz > 0.0)) throw ValidationError("rep_rate_hz must be > 0");
}

void CoincidenceCounter::push_trigger(double t) {
  if ((last_trigger_ && t < *last_trigger_) || t < horizon_)
    throw ValidationError(fmt::format("trigger stream out of order at t = {} ns", t));
  last_trigger_ = t;
  trigger_in_.push_back(t);
  drain(false);
}

void CoincidenceCounter::push_signal(double t) {
  if ((last_signal_ && t < *last_signal_) || t < horizon_)
    throw ValidationError(fmt::format("signal stream out of order at t = {} ns", t));
  last_signal_ = t;
  signal_in_.push_back(t);
  drain(false);
}

void CoincidenceCounter::push(const DetectionEvent& e) {
  if (e.channel == Channel::trigger)
    push_trigger(e.time_ns);
  else
    push_signal(e.time_ns);
}

void CoincidenceCounter::advance_to(double time_ns) {
  if (time_ns > horizon_) {
    horizon_ = time_ns;
    drain(false);
  }
}

void CoincidenceCounter::flush() { drain(true); }

// Events are resolved in merged time order. A queued event is safe to resolve
// once the other channel has been pushed up to (at least) its time, because
// later pushes on that channel cannot be earlier.
void CoincidenceCounter::drain(bool all) {
  for (;;) {
    const bool have_t = !trigger_in_.empty();
    const bool have_s = !signal_in_.empty();
    if (!have_t && !have_s) return;
    bool take_trigger;
    if (have_t && have_s) {
      take_trigger = trigger_in_.front() <= signal_in_.front();
    } else if (have_t) {
      const double head = trigger_in_.front();
      if (!all && !(horizon_ >= head || (last_signal_ && *last_signal_ >= head))) return;
      take_trigger = true;
    } else {
      const double head = signal_in_.front();
      if (!all && !(horizon_ > head || (last_trigger_ && *last_trigger_ > head))) return;
      take_trigger = false;
    }
    if (take_trigger) {
      const double t = trigger_in_.front();
      trigger_in_.pop_front();
      on_trigger(t);
    } else {
      const double t = signal_in_.front();
      signal_in_.pop_front();
      on_signal(t);
    }
  }
}

void CoincidenceCounter::on_trigger(double t) {
  if (gate_.gating_enabled && !gate_pass(t, rep_rate_hz_, gate_)) return;
  ++s_trigger_;
  const double w = gate_.coincidence_window_ns;
  while (!open_signals_.empty() && open_signals_.front() < t - w) open_signals_.pop_front();
  if (!open_signals_.empty()) {
    open_signals_.pop_front();
    ++coincidences_;
  } else {
    open_triggers_.push_back(t);
  }
}

void CoincidenceCounter::on_signal(double t) {
  ++s_signal_;
  const double w = gate_.coincidence_window_ns;
  while (!open_triggers_.empty() && open_triggers_.front() < t - w) open_triggers_.pop_front();
  if (!open_triggers_.empty()) {
    open_triggers_.pop_front();
    ++coincidences_;
  } else {
    open_signals_.push_back(t);
  }
}

CountsSummary CoincidenceCounter::summary(double integration_time_s) const {
  CountsSummary s;
  s.integration_time_s = integration_time_s;
  s.s_trigger = s_trigger_;
  s.s_signal = s_signal_;
  s.coincidences = coincidences_;
  s.accidentals_analytic = accidentals_analytic(static_cast<double>(s_trigger_),
                                                static_cast<double>(s_signal_), rep_rate_hz_,
                                                integration_time_s);
  return s;
}

CountsSummary count_run(std::span<const double> trigger_ns, std::span<const double> signal_ns,
                        const GateConfig& gate, double rep_rate_hz, double integration_time_s) {
  CoincidenceCounter counter(gate, rep_rate_hz);
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < trigger_ns.size() || j < signal_ns.size()) {
    if (j == signal_ns.size() || (i < trigger_ns.size() && trigger_ns[i] <= signal_ns[j]))
      counter.push_trigger(trigger_ns[i++]);
    else
      counter.push_signal(signal_ns[j++]);
  }
  counter.flush();
  return counter.summary(integration_time_s);
}

CountsSummary count_run(const DetectedStreams& streams, const GateConfig& gate,
                        double rep_rate_hz, double integration_time_s) {
  std::vector<double> t;
  std::vector<double> s;
  t.reserve(streams.trigger.size());
  s.reserve(streams.signal.size());
  for (const auto& e : streams.trigger) t.push_back(e.time_ns);
  for (const auto& e : streams.signal) s.push_back(e.time_ns);
  return count_run(t, s, gate, rep_rate_hz, integration_time_s);
}

}  // namespace hsps
