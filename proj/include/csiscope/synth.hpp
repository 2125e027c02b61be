#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "csiscope/model.hpp"

namespace csiscope {

/// Amplitude modulation applied to a contiguous range of subcarriers.
/// Subcarrier positions are in linear (display) order, 0 = lowest frequency.
struct ModulationBand {
  std::size_t begin{0};
  std::size_t end{0};  // exclusive
  double freq_hz{1.0};
  double depth{0.0};
};

/// Parameters of the synthetic channel Y = H o X + noise with X = 1.
struct SynthProfile {
  std::string name;
  int class_id{0};
  std::size_t n_subcarriers{64};
  double frame_rate_hz{9.0};
  double base_amplitude{400.0};
  std::vector<ModulationBand> bands;
  double noise_sigma{0.0};
  double rssi_mean_dbm{-55.0};
  double rssi_jitter_db{0.0};
  std::uint64_t rng_seed{0};
  MacAddress source_mac{{0x02, 0x00, 0x5e, 0x10, 0x00, 0x01}};
  /// Per-subcarrier phase ramp theta_p = phase_offset + phase_slope * (p - N/2).
  double phase_slope_rad{0.35};
  double phase_offset_rad{0.2};
};

/// Throws Error(kBadFieldRange) describing the first violated constraint.
void ValidateProfile(const SynthProfile &profile);

/// Modulation envelope 1 + sum(depth * sin(2 pi f t)) at linear position p.
double SynthEnvelope(const SynthProfile &profile, std::size_t position, std::uint64_t t_us);

/// One frame in FFT order. Pure function of (profile, t_us); seq is left 0.
CsiFrame GenerateSyntheticFrame(const SynthProfile &profile, std::uint64_t t_us);

/// Frame period in microseconds, rounded to the nearest integer.
std::uint64_t FramePeriodUs(double frame_rate_hz);

/// Shipped profiles: "idle", "pattern-a", "pattern-b", "pattern-c" with class
/// ids 0..3 and disjoint modulation bands. Throws Error(kUnknownProfile).
SynthProfile ShippedProfile(std::string_view name);
std::vector<std::string> ShippedProfileNames();

}  // namespace csiscope
