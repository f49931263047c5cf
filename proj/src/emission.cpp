#include "hsps/emission.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "hsps/errors.hpp"
#include "hsps/parallel.hpp"

namespace hsps {
namespace {

// Blocks merged per release step. Fixed so memory does not grow with threads.
constexpr std::size_t kBlocksPerBatch = 16;

struct Keyed {
  EmissionRecord record;
  std::uint64_t block;
  std::uint64_t seq;
};

bool keyed_less(const Keyed& a, const Keyed& b) {
  if (a.record.time_ns != b.record.time_ns) return a.record.time_ns < b.record.time_ns;
  if (a.block != b.block) return a.block < b.block;
  return a.seq < b.seq;
}

void require(bool ok, const char* field, double value, const char* rule) {
  if (!ok) throw ValidationError(fmt::format("{} = {} violates {}", field, value, rule));
}

// Zero-truncated Poisson draw with mean parameter m.
std::uint64_t occupied_count(double m, Engine& rng) {
  if (m > 1.0) {
    std::poisson_distribution<std::uint64_t> pois(m);
    for (;;) {
      if (const auto k = pois(rng); k > 0) return k;
    }
  }
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u = uni(rng);
  double p = m * std::exp(-m) / -std::expm1(-m);
  double cum = p;
  std::uint64_t k = 1;
  while (u > cum && k < 10000) {
    ++k;
    p *= m / static_cast<double>(k);
    cum += p;
  }
  return k;
}

double sample_above(const SpectralShape& shape, double floor_nm, Engine& rng) {
  for (int i = 0; i < 1000; ++i) {
    const double l = sample_wavelength(shape, rng);
    if (l > floor_nm) return l;
  }
  throw ValidationError(fmt::format("spectral shape centered at {} nm has no support above {} nm",
                                    shape.center(), floor_nm));
}

class BlockGenerator {
 public:
  BlockGenerator(const SourceConfig& c, std::uint64_t seed) : c_(c), seed_(seed) {
    m2_ = c.mean_pairs_per_pulse();
    m1_ = c.mean_type1_per_pulse();
    mf_ = c.mean_fluor_per_pulse();
    m_ = m2_ + m1_ + mf_;
  }

  std::vector<Keyed> run(std::uint64_t block, std::uint64_t first, std::uint64_t last) const {
    std::vector<Keyed> out;
    if (m_ <= 0.0 || first >= last) return out;
    Engine rng = substream(seed_, StreamKind::emission, block);
    const double occupied = -std::expm1(-m_);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::exponential_distribution<double> decay(1.0 / c_.fluor_lifetime_ns);

    std::uint64_t seq = 0;
    std::uint32_t pair_counter = 0;
    auto push = [&](double t, double l, Polarization pol, Origin origin,
                    std::optional<std::uint64_t> pair) {
      out.push_back({EmissionRecord{t, l, pol, origin, pair}, block, seq++});
    };
    auto gap = [&]() -> std::uint64_t {
      if (occupied >= 1.0 - 1e-15) return 0;
      std::geometric_distribution<std::uint64_t> geo(occupied);
      return geo(rng);
    };

    const double pump = c_.pump.center();
    for (std::uint64_t pulse = first + gap(); pulse < last; pulse += 1 + gap()) {
      const double t0 = c_.pulse_time_ns(pulse);
      const std::uint64_t n = occupied_count(m_, rng);
      for (std::uint64_t k = 0; k < n; ++k) {
        const double pick = uni(rng) * m_;
        if (pick < m2_) {
          const std::uint64_t id = (block << 32) | pair_counter++;
          const double lt = sample_above(c_.pdc, pump, rng);
          push(t0, lt, Polarization::V, Origin::pdc2_trigger, id);
          push(t0, partner_wavelength(pump, lt), Polarization::H, Origin::pdc2_signal, id);
        } else if (pick < m2_ + m1_) {
          const std::uint64_t id = (block << 32) | pair_counter++;
          const double la = sample_above(c_.type1, pump, rng);
          push(t0, la, c_.type1_polarization, Origin::pdc1, id);
          push(t0, partner_wavelength(pump, la), c_.type1_polarization, Origin::pdc1, id);
        } else {
          const double t = t0 + decay(rng);
          const double l = sample_above(c_.fluorescence, 0.0, rng);
          const auto pol = uni(rng) < c_.fluor_trigger_fraction ? Polarization::V : Polarization::H;
          push(t, l, pol, Origin::fluorescence, std::nullopt);
        }
      }
    }
    std::sort(out.begin(), out.end(), keyed_less);
    return out;
  }

 private:
  const SourceConfig& c_;
  std::uint64_t seed_;
  double m2_, m1_, mf_, m_;
};

}  // namespace

std::string_view to_string(Polarization p) { return p == Polarization::H ? "H" : "V"; }

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::pdc2_signal: return "pdc2_signal";
    case Origin::pdc2_trigger: return "pdc2_trigger";
    case Origin::pdc1: return "pdc1";
    case Origin::fluorescence: return "fluorescence";
  }
  return "unknown";
}

void SourceConfig::validate() const {
  require(rep_rate_hz > 0.0 && std::isfinite(rep_rate_hz), "rep_rate_hz", rep_rate_hz, "> 0");
  require(integration_time_s >= 0.0 && std::isfinite(integration_time_s), "integration_time_s",
          integration_time_s, ">= 0");
  require(coupled_pump_power_mw >= 0.0, "coupled_pump_power_mw", coupled_pump_power_mw, ">= 0");
  require(mu_pairs >= 0.0, "mu_pairs", mu_pairs, ">= 0");
  require(mu_type1 >= 0.0, "mu_type1", mu_type1, ">= 0");
  require(mu_fluor >= 0.0, "mu_fluor", mu_fluor, ">= 0");
  require(fluor_lifetime_ns > 0.0, "fluor_lifetime_ns", fluor_lifetime_ns, "> 0");
  require(fluor_trigger_fraction >= 0.0 && fluor_trigger_fraction <= 1.0, "fluor_trigger_fraction",
          fluor_trigger_fraction, "[0, 1]");
  require(pdc.center() > pump.center(), "pdc center", pdc.center(), "> pump center");
  require(type1.center() > pump.center(), "type1 center", type1.center(), "> pump center");
}

std::uint64_t SourceConfig::pulse_count() const {
  return static_cast<std::uint64_t>(std::llround(rep_rate_hz * integration_time_s));
}

double SourceConfig::expected_record_count() const {
  const double n = static_cast<double>(pulse_count());
  return n * (2.0 * mean_pairs_per_pulse() + 2.0 * mean_type1_per_pulse() + mean_fluor_per_pulse());
}

void emit_stream(const SourceConfig& config, std::uint64_t seed, const EmissionOptions& options,
                 const EmissionSink& sink) {
  config.validate();
  if (options.block_pulses == 0) throw ValidationError("block_pulses must be positive");

  const std::uint64_t pulses = config.pulse_count();
  const std::uint64_t blocks = (pulses + options.block_pulses - 1) / options.block_pulses;
  const BlockGenerator generator(config, seed);

  std::vector<Keyed> pending;
  std::vector<EmissionRecord> chunk;
  for (std::uint64_t b0 = 0; b0 < blocks; b0 += kBlocksPerBatch) {
    const std::uint64_t b1 = std::min<std::uint64_t>(blocks, b0 + kBlocksPerBatch);
    std::vector<std::vector<Keyed>> generated(b1 - b0);
    parallel_for(generated.size(), options.threads, [&](std::size_t i) {
      const std::uint64_t b = b0 + i;
      const std::uint64_t first = b * options.block_pulses;
      const std::uint64_t last = std::min(pulses, first + options.block_pulses);
      generated[i] = generator.run(b, first, last);
    });

    for (auto& g : generated) {
      const auto mid = pending.size();
      pending.insert(pending.end(), g.begin(), g.end());
      std::inplace_merge(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(mid),
                         pending.end(), keyed_less);
    }

    // Every later record is at or after the first pulse of the next batch.
    const bool last_batch = b1 == blocks;
    const double watermark =
        last_batch ? INFINITY : config.pulse_time_ns(b1 * options.block_pulses);
    const auto split = std::partition_point(pending.begin(), pending.end(), [&](const Keyed& k) {
      return k.record.time_ns < watermark;
    });
    if (split != pending.begin()) {
      chunk.clear();
      chunk.reserve(static_cast<std::size_t>(split - pending.begin()));
      for (auto it = pending.begin(); it != split; ++it) chunk.push_back(it->record);
      pending.erase(pending.begin(), split);
      sink(chunk);
    }
  }
}

std::vector<EmissionRecord> emit_run(const SourceConfig& config, std::uint64_t seed,
                                     const EmissionOptions& options) {
  config.validate();
  const double expected = config.expected_record_count();
  if (expected > options.max_records)
    throw BudgetError(fmt::format(
        "expected {:.3g} emission records exceeds the in-memory budget of {:.3g}; use streaming",
        expected, options.max_records));
  std::vector<EmissionRecord> out;
  out.reserve(static_cast<std::size_t>(expected * 1.1 + 16));
  emit_stream(config, seed, options, [&](std::span<const EmissionRecord> chunk) {
    out.insert(out.end(), chunk.begin(), chunk.end());
  });
  return out;
}

ExpectedRates expected_rates(const SourceConfig& c) {
  c.validate();
  ExpectedRates r;
  r.pdc2_pairs = c.rep_rate_hz * c.mean_pairs_per_pulse();
  r.type1_pairs = c.rep_rate_hz * c.mean_type1_per_pulse();
  (c.type1_polarization == Polarization::H ? r.type1_photons_h : r.type1_photons_v) =
      2.0 * r.type1_pairs;
  const double fluor = c.rep_rate_hz * c.mean_fluor_per_pulse();
  r.fluor_photons_v = fluor * c.fluor_trigger_fraction;
  r.fluor_photons_h = fluor - r.fluor_photons_v;
  return r;
}

}  // namespace hsps
