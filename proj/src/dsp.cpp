#include "csiscope/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "csiscope/error.hpp"

namespace csiscope {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t CenterWindowStart(std::size_t n, std::size_t target_n, SubcarrierOrder order) {
  if (order != SubcarrierOrder::kLinear) {
    throw Error(ErrorCode::kChainInvalid, "bandwidth narrowing needs linear subcarrier order");
  }
  if ((target_n != 64 && target_n != 128) || target_n >= n) {
    throw Error(ErrorCode::kBadTarget,
                "cannot narrow N=" + std::to_string(n) + " to " + std::to_string(target_n));
  }
  return n / 2 - target_n / 2;
}

template <typename T>
void KeepWindow(std::vector<T> &values, std::size_t start, std::size_t count) {
  values.erase(values.begin() + static_cast<std::ptrdiff_t>(start + count), values.end());
  values.erase(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(start));
}

std::vector<std::size_t> NullPositions(std::size_t n, std::span<const int> null_set) {
  const int half = static_cast<int>(n / 2);
  std::vector<std::size_t> positions;
  positions.reserve(null_set.size());
  for (const int idx : null_set) {
    if (idx < -half || idx >= half) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "logical subcarrier " + std::to_string(idx) + " outside N=" + std::to_string(n));
    }
    positions.push_back(static_cast<std::size_t>(idx + half));
  }
  return positions;
}

}  // namespace

bool MacAllowed(const MacAddress &mac, const std::set<MacAddress> &allowlist) {
  return allowlist.empty() || allowlist.contains(mac);
}

std::optional<CsiFrame> FilterMac(CsiFrame frame, const std::set<MacAddress> &allowlist) {
  if (!MacAllowed(frame.source_mac, allowlist)) return std::nullopt;
  return frame;
}

ReorderOutcome ReorderSubcarriers(CsiFrame &frame) {
  if (frame.subcarrier_order == SubcarrierOrder::kLinear) return ReorderOutcome::kAlreadyLinear;
  FftToLinear(frame.csi);
  frame.subcarrier_order = SubcarrierOrder::kLinear;
  return ReorderOutcome::kReordered;
}

ReorderOutcome ReorderSubcarriers(PolarFrame &frame) {
  if (frame.meta.subcarrier_order == SubcarrierOrder::kLinear) return ReorderOutcome::kAlreadyLinear;
  FftToLinear(frame.amplitudes);
  FftToLinear(frame.phases);
  frame.meta.subcarrier_order = SubcarrierOrder::kLinear;
  return ReorderOutcome::kReordered;
}

double WrappedPhase(double re, double im) {
  if (re == 0.0 && im == 0.0) return 0.0;
  const double phi = std::atan2(im, re);
  return phi <= -kPi ? kPi : phi;
}

PolarFrame ExtractAmplitudePhase(const CsiFrame &frame) {
  PolarFrame out;
  out.meta = MetaOf(frame);
  out.rssi_smoothed_dbm = static_cast<double>(frame.rssi_dbm);
  out.amplitudes.resize(frame.csi.size());
  out.phases.resize(frame.csi.size());
  for (std::size_t i = 0; i < frame.csi.size(); ++i) {
    const auto &s = frame.csi[i];
    out.amplitudes[i] = std::hypot(s.re, s.im);
    out.phases[i] = WrappedPhase(s.re, s.im);
  }
  return out;
}

void NarrowBandwidth(PolarFrame &frame, std::size_t target_n) {
  const std::size_t start =
      CenterWindowStart(frame.amplitudes.size(), target_n, frame.meta.subcarrier_order);
  KeepWindow(frame.amplitudes, start, target_n);
  KeepWindow(frame.phases, start, target_n);
  frame.meta.n_subcarriers = target_n;
  frame.meta.bandwidth_mhz = BandwidthForSubcarriers(target_n);
}

void NarrowBandwidth(CsiFrame &frame, std::size_t target_n) {
  const std::size_t start = CenterWindowStart(frame.csi.size(), target_n, frame.subcarrier_order);
  KeepWindow(frame.csi, start, target_n);
  frame.bandwidth_mhz = BandwidthForSubcarriers(target_n);
}

std::vector<int> DefaultNullSet(std::size_t n) {
  // Occupied subcarriers: 20 MHz +-1..28, 40 MHz +-2..58, 80 MHz +-2..122.
  int edge = 0;
  int dc_half_width = 0;
  switch (n) {
    case 64: edge = 28; dc_half_width = 0; break;
    case 128: edge = 58; dc_half_width = 1; break;
    case 256: edge = 122; dc_half_width = 1; break;
    default: return {};
  }
  const int half = static_cast<int>(n / 2);
  std::vector<int> out;
  for (int k = -half; k < half; ++k) {
    if (k < -edge || k > edge || std::abs(k) <= dc_half_width) out.push_back(k);
  }
  return out;
}

void NullGuardSubcarriers(PolarFrame &frame, std::span<const int> null_set) {
  for (const auto pos : NullPositions(frame.amplitudes.size(), null_set)) {
    frame.amplitudes[pos] = 0.0;
    frame.phases[pos] = 0.0;
  }
}

void NullGuardSubcarriers(CsiFrame &frame, std::span<const int> null_set) {
  for (const auto pos : NullPositions(frame.csi.size(), null_set)) {
    frame.csi[pos] = {0.0, 0.0};
  }
}

bool CompensateAgc(PolarFrame &frame, double rssi_dbm) {
  double power = 0.0;
  for (const double a : frame.amplitudes) power += a * a;
  if (!(power > 0.0)) {
    frame.zero_power = true;
    return false;
  }
  const double target = std::pow(10.0, rssi_dbm / 10.0);
  const double scale = std::sqrt(target / power);
  for (double &a : frame.amplitudes) a *= scale;
  return true;
}

double SmoothRssi(SmoothingState &state, const MacAddress &mac, double x_dbm, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kBadAlpha, "alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
  auto [it, inserted] = state.last_dbm.try_emplace(mac, x_dbm);
  if (!inserted) it->second = alpha * x_dbm + (1.0 - alpha) * it->second;
  return it->second;
}

void UnwrapPhases(std::span<double> phases) {
  if (phases.empty()) return;
  double offset = 0.0;  // accumulated multiple of 2 pi
  double prev_raw = phases[0];
  for (std::size_t i = 1; i < phases.size(); ++i) {
    const double raw = phases[i];
    const double turns = std::ceil((raw - prev_raw - kPi) / kTwoPi);
    offset -= turns * kTwoPi;
    phases[i] = raw + offset;
    prev_raw = raw;
  }
}

void UnwrapPhase(PolarFrame &frame) { UnwrapPhases(frame.phases); }

std::vector<ComplexSample> ReconstructComplex(const PolarFrame &frame) {
  std::vector<ComplexSample> out(frame.amplitudes.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {frame.amplitudes[i] * std::cos(frame.phases[i]),
              frame.amplitudes[i] * std::sin(frame.phases[i])};
  }
  return out;
}

}  // namespace csiscope
