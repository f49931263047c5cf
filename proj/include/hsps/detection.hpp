#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <span>
#include <string_view>
#include <vector>

#include "hsps/emission.hpp"
#include "hsps/random.hpp"
#include "hsps/spectra.hpp"

namespace hsps {

enum class Channel : std::uint8_t { trigger, signal };
enum class EventSource : std::uint8_t { pdc2_signal, pdc2_trigger, pdc1, fluorescence, dark };
enum class DeadTimeModel { non_paralyzable, paralyzable };

std::string_view to_string(Channel c);
std::string_view to_string(EventSource s);
EventSource event_source(Origin o);

struct DetectorModel {
  double quantum_efficiency = 0.6;
  double jitter_sigma_ns = 0.35;
  double dead_time_ns = 50.0;
  double dark_rate_hz = 0.0;
  DeadTimeModel dead_time_model = DeadTimeModel::non_paralyzable;

  void validate() const;
};

struct ArmConfig {
  double optics_transmission = 1.0;
  double fiber_coupling = 0.9;
  DetectorModel detector;
  std::optional<SlitFilter> slit;  // trigger arm only

  void validate() const;
};

/// Survival probability of one photon at the given wavelength.
double arm_transmittance(const ArmConfig& arm, double wavelength_nm);

/// Wavelength-independent part of arm_transmittance.
double arm_flat_transmittance(const ArmConfig& arm);

struct DetectionEvent {
  Channel channel = Channel::trigger;
  double time_ns = 0.0;
  EventSource source = EventSource::dark;
};

using DetectionSink = std::function<void(const DetectionEvent&)>;

struct DetectOptions {
  std::uint64_t seed = 0;
  /// Dark counts are drawn over [0, run_end_ns).
  double run_end_ns = 0.0;
};

/// Streaming photon-to-click transducer for both arms.
///
/// V records go to the trigger arm and H records to the signal arm. Each
/// record survives with arm_transmittance(arm, wavelength), then gets gaussian
/// jitter (truncated at 10 sigma). Dark counts are merged in, and dead time is
/// applied last, per channel. Events reach the sink in time order within each
/// channel; the two channels interleave.
class Detector {
 public:
  Detector(ArmConfig trigger_arm, ArmConfig signal_arm, DetectOptions options, DetectionSink sink);

  /// Records must arrive in nondecreasing time order.
  void push(const EmissionRecord& record);
  void push(std::span<const EmissionRecord> records);

  /// Drains all buffered events and the remaining dark counts.
  void finish();

  /// Every event delivered later, on either channel, is at or after this time.
  double watermark() const;

 private:
  struct Pending {
    double time_ns;
    std::uint64_t seq;
    EventSource source;
    bool operator>(const Pending& o) const {
      return time_ns != o.time_ns ? time_ns > o.time_ns : seq > o.seq;
    }
  };

  struct ChannelState {
    Channel channel;
    ArmConfig arm;
    Engine rng;  // survival and jitter; per channel so one arm's losses don't reshuffle the other
    Engine dark_rng;
    double next_dark_ns;
    double horizon_ns;  // max backward jitter
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> buffer;
    std::optional<double> dead_reference;
  };

  void release(ChannelState& ch, double watermark_ns);
  void advance_dark(ChannelState& ch, double until_ns);
  void emit(ChannelState& ch, const Pending& p);

  ChannelState trigger_;
  ChannelState signal_;
  DetectOptions options_;
  DetectionSink sink_;
  std::uint64_t seq_ = 0;
  double last_input_ns_ = -1.0e300;
  bool finished_ = false;
};

struct DetectedStreams {
  std::vector<DetectionEvent> trigger;
  std::vector<DetectionEvent> signal;
};

DetectedStreams detect(std::span<const EmissionRecord> records, const ArmConfig& trigger_arm,
                       const ArmConfig& signal_arm, const DetectOptions& options);

}  // namespace hsps
