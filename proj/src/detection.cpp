#include "hsps/detection.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "hsps/errors.hpp"

namespace hsps {
namespace {

constexpr double kJitterClip = 10.0;  // sigmas

void require_probability(double p, const char* field) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ValidationError(fmt::format("{} = {} is not a probability in [0, 1]", field, p));
}

}  // namespace

std::string_view to_string(Channel c) { return c == Channel::trigger ? "trigger" : "signal"; }

std::string_view to_string(EventSource s) {
  switch (s) {
    case EventSource::pdc2_signal: return "pdc2_signal";
    case EventSource::pdc2_trigger: return "pdc2_trigger";
    case EventSource::pdc1: return "pdc1";
    case EventSource::fluorescence: return "fluorescence";
    case EventSource::dark: return "dark";
  }
  return "unknown";
}

EventSource event_source(Origin o) {
  switch (o) {
    case Origin::pdc2_signal: return EventSource::pdc2_signal;
    case Origin::pdc2_trigger: return EventSource::pdc2_trigger;
    case Origin::pdc1: return EventSource::pdc1;
    case Origin::fluorescence: return EventSource::fluorescence;
  }
  return EventSource::dark;
}

void DetectorModel::validate() const {
  require_probability(quantum_efficiency, "quantum_efficiency");
  if (!(jitter_sigma_ns >= 0.0)) throw ValidationError("jitter_sigma_ns must be >= 0");
  if (!(dead_time_ns >= 0.0)) throw ValidationError("dead_time_ns must be >= 0");
  if (!(dark_rate_hz >= 0.0)) throw ValidationError("dark_rate_hz must be >= 0");
}

void ArmConfig::validate() const {
  require_probability(optics_transmission, "optics_transmission");
  require_probability(fiber_coupling, "fiber_coupling");
  detector.validate();
  if (slit) slit->validate();
}

double arm_flat_transmittance(const ArmConfig& arm) {
  return arm.optics_transmission * arm.fiber_coupling * arm.detector.quantum_efficiency;
}

double arm_transmittance(const ArmConfig& arm, double wavelength_nm) {
  const double flat = arm_flat_transmittance(arm);
  return arm.slit ? flat * slit_transmission(*arm.slit, wavelength_nm) : flat;
}

Detector::Detector(ArmConfig trigger_arm, ArmConfig signal_arm, DetectOptions options,
                   DetectionSink sink)
    : trigger_{Channel::trigger, std::move(trigger_arm),
               substream(options.seed, StreamKind::detection, 0),
               substream(options.seed, StreamKind::dark_trigger), 0.0, 0.0, {}, std::nullopt},
      signal_{Channel::signal, std::move(signal_arm),
              substream(options.seed, StreamKind::detection, 1),
              substream(options.seed, StreamKind::dark_signal), 0.0, 0.0, {}, std::nullopt},
      options_(options),
      sink_(std::move(sink)) {
  trigger_.arm.validate();
  signal_.arm.validate();
  if (signal_.arm.slit) throw ValidationError("the signal arm has no slit filter");
  for (ChannelState* ch : {&trigger_, &signal_}) {
    ch->horizon_ns = kJitterClip * ch->arm.detector.jitter_sigma_ns;
    ch->next_dark_ns = INFINITY;
    if (ch->arm.detector.dark_rate_hz > 0.0) {
      std::exponential_distribution<double> gap(ch->arm.detector.dark_rate_hz * 1e-9);
      ch->next_dark_ns = gap(ch->dark_rng);
    }
  }
}

void Detector::push(std::span<const EmissionRecord> records) {
  for (const auto& r : records) push(r);
}

void Detector::push(const EmissionRecord& r) {
  if (finished_) throw ValidationError("Detector::push after finish");
  if (r.time_ns < last_input_ns_)
    throw ValidationError(fmt::format("emission stream out of order at t = {} ns", r.time_ns));
  last_input_ns_ = r.time_ns;

  ChannelState& ch = r.polarization == Polarization::V ? trigger_ : signal_;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  if (uni(ch.rng) < arm_transmittance(ch.arm, r.wavelength_nm)) {
    double t = r.time_ns;
    const double sigma = ch.arm.detector.jitter_sigma_ns;
    if (sigma > 0.0) {
      std::normal_distribution<double> jitter(0.0, sigma);
      t += std::clamp(jitter(ch.rng), -ch.horizon_ns, ch.horizon_ns);
    }
    ch.buffer.push({t, seq_++, event_source(r.origin)});
  }
  release(trigger_, r.time_ns - trigger_.horizon_ns);
  release(signal_, r.time_ns - signal_.horizon_ns);
}

double Detector::watermark() const {
  if (finished_) return INFINITY;
  return last_input_ns_ - std::max(trigger_.horizon_ns, signal_.horizon_ns);
}

void Detector::finish() {
  if (finished_) return;
  finished_ = true;
  advance_dark(trigger_, options_.run_end_ns);
  advance_dark(signal_, options_.run_end_ns);
  release(trigger_, INFINITY);
  release(signal_, INFINITY);
}

void Detector::advance_dark(ChannelState& ch, double until_ns) {
  if (ch.next_dark_ns >= until_ns) return;
  std::exponential_distribution<double> gap(ch.arm.detector.dark_rate_hz * 1e-9);
  const double stop = std::min(until_ns, options_.run_end_ns);
  while (ch.next_dark_ns < stop) {
    ch.buffer.push({ch.next_dark_ns, seq_++, EventSource::dark});
    ch.next_dark_ns += gap(ch.dark_rng);
  }
}

void Detector::release(ChannelState& ch, double watermark_ns) {
  advance_dark(ch, watermark_ns);
  while (!ch.buffer.empty() && ch.buffer.top().time_ns < watermark_ns) {
    const Pending p = ch.buffer.top();
    ch.buffer.pop();
    emit(ch, p);
  }
}

void Detector::emit(ChannelState& ch, const Pending& p) {
  const double dead = ch.arm.detector.dead_time_ns;
  if (ch.dead_reference && p.time_ns - *ch.dead_reference < dead) {
    if (ch.arm.detector.dead_time_model == DeadTimeModel::paralyzable) ch.dead_reference = p.time_ns;
    return;
  }
  ch.dead_reference = p.time_ns;
  if (sink_) sink_(DetectionEvent{ch.channel, p.time_ns, p.source});
}

DetectedStreams detect(std::span<const EmissionRecord> records, const ArmConfig& trigger_arm,
                       const ArmConfig& signal_arm, const DetectOptions& options) {
  DetectedStreams out;
  Detector d(trigger_arm, signal_arm, options, [&](const DetectionEvent& e) {
    (e.channel == Channel::trigger ? out.trigger : out.signal).push_back(e);
  });
  d.push(records);
  d.finish();
  return out;
}

}  // namespace hsps
