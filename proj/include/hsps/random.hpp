#pragma once

#include <cstdint>
#include <random>

namespace hsps {

using Engine = std::mt19937_64;

/// Purpose tags; each (seed, kind, index) triple gets an independent stream.
enum class StreamKind : std::uint64_t {
  emission = 1,
  detection = 2,
  dark_trigger = 3,
  dark_signal = 4,
  oracle = 5,
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Engine for substream `index` of `kind` under a master seed. The mapping is
/// fixed, so results never depend on how work is scheduled.
Engine substream(std::uint64_t seed, StreamKind kind, std::uint64_t index = 0);

}  // namespace hsps
