#include "csiscope/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "csiscope/error.hpp"

namespace csiscope {

namespace {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SynthProfile Base(std::string name, int class_id) {
  SynthProfile p;
  p.name = std::move(name);
  p.class_id = class_id;
  p.n_subcarriers = 64;
  p.frame_rate_hz = 9.0;
  p.base_amplitude = 400.0;
  p.noise_sigma = 40.0;
  p.rssi_mean_dbm = -55.0;
  p.rssi_jitter_db = 1.0;
  p.rng_seed = 0x5eed0000ULL + static_cast<std::uint64_t>(class_id);
  return p;
}

}  // namespace

void ValidateProfile(const SynthProfile &profile) {
  if (BandwidthForSubcarriers(profile.n_subcarriers) == 0) {
    throw Error(ErrorCode::kBadFieldRange,
                "profile N=" + std::to_string(profile.n_subcarriers) + " unsupported");
  }
  if (!(profile.frame_rate_hz > 0.0)) {
    throw Error(ErrorCode::kBadFieldRange, "frame rate must be positive");
  }
  if (!(profile.noise_sigma >= 0.0) || !(profile.rssi_jitter_db >= 0.0)) {
    throw Error(ErrorCode::kBadFieldRange, "noise and jitter must be non-negative");
  }
  for (const auto &band : profile.bands) {
    if (!(band.depth >= 0.0 && band.depth <= 1.0)) {
      throw Error(ErrorCode::kBadFieldRange, "modulation depth outside [0,1]");
    }
    if (band.begin >= band.end || band.end > profile.n_subcarriers) {
      throw Error(ErrorCode::kBadFieldRange, "band outside [0, N)");
    }
  }
}

double SynthEnvelope(const SynthProfile &profile, std::size_t position, std::uint64_t t_us) {
  const double t_s = static_cast<double>(t_us) / 1e6;
  double envelope = 1.0;
  for (const auto &band : profile.bands) {
    if (position >= band.begin && position < band.end) {
      const double cycles = std::fmod(band.freq_hz * t_s, 1.0);
      envelope += band.depth * std::sin(2.0 * std::numbers::pi * cycles);
    }
  }
  return envelope;
}

CsiFrame GenerateSyntheticFrame(const SynthProfile &profile, std::uint64_t t_us) {
  const std::size_t n = profile.n_subcarriers;
  std::mt19937_64 rng(SplitMix64(profile.rng_seed ^ SplitMix64(t_us)));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);

  CsiFrame frame;
  frame.timestamp_us = t_us;
  frame.source_mac = profile.source_mac;
  frame.bandwidth_mhz = BandwidthForSubcarriers(n);
  frame.subcarrier_order = SubcarrierOrder::kFft;
  frame.csi.resize(n);
  const double half = static_cast<double>(n / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t position = (i + n / 2) % n;
    const double amplitude = profile.base_amplitude * SynthEnvelope(profile, position, t_us);
    const double theta =
        profile.phase_offset_rad + profile.phase_slope_rad * (static_cast<double>(position) - half);
    double re = amplitude * std::cos(theta);
    double im = amplitude * std::sin(theta);
    if (profile.noise_sigma > 0.0) {
      re += profile.noise_sigma * noise(rng);
      im += profile.noise_sigma * noise(rng);
    }
    frame.csi[i] = {re, im};
  }
  const double rssi = profile.rssi_mean_dbm + profile.rssi_jitter_db * jitter(rng);
  frame.rssi_dbm = std::clamp(static_cast<int>(std::lround(rssi)), kMinRssiDbm, kMaxRssiDbm);
  return frame;
}

std::uint64_t FramePeriodUs(double frame_rate_hz) {
  return static_cast<std::uint64_t>(std::llround(1e6 / frame_rate_hz));
}

SynthProfile ShippedProfile(std::string_view name) {
  if (name == "idle") {
    return Base("idle", 0);
  }
  if (name == "pattern-a") {
    auto p = Base("pattern-a", 1);
    p.bands = {{6, 16, 1.0, 0.5}};
    return p;
  }
  if (name == "pattern-b") {
    auto p = Base("pattern-b", 2);
    p.bands = {{20, 30, 2.0, 0.5}};
    return p;
  }
  if (name == "pattern-c") {
    auto p = Base("pattern-c", 3);
    p.bands = {{36, 46, 3.0, 0.5}};
    return p;
  }
  throw Error(ErrorCode::kUnknownProfile, std::string(name));
}

std::vector<std::string> ShippedProfileNames() {
  return {"idle", "pattern-a", "pattern-b", "pattern-c"};
}

}  // namespace csiscope
