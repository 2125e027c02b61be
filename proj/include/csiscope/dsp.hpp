#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "csiscope/model.hpp"

namespace csiscope {

// Preprocessing primitives. The plugin chain wraps each of these; they are
// also usable on their own.

/// Empty allowlist passes every frame.
[[nodiscard]] bool MacAllowed(const MacAddress &mac, const std::set<MacAddress> &allowlist);
std::optional<CsiFrame> FilterMac(CsiFrame frame, const std::set<MacAddress> &allowlist);

enum class ReorderOutcome { kReordered, kAlreadyLinear };

/// FFT order -> linear order: output k holds logical subcarrier k - N/2, i.e.
/// input [N/2..N-1] followed by [0..N/2-1].
template <typename T>
void FftToLinear(std::vector<T> &values) {
  const std::size_t half = values.size() / 2;
  std::vector<T> out;
  out.reserve(values.size());
  out.insert(out.end(), values.begin() + static_cast<std::ptrdiff_t>(half), values.end());
  out.insert(out.end(), values.begin(), values.begin() + static_cast<std::ptrdiff_t>(half));
  values = std::move(out);
}

ReorderOutcome ReorderSubcarriers(CsiFrame &frame);
ReorderOutcome ReorderSubcarriers(PolarFrame &frame);

/// a = |h|, phi = atan2(im, re) in (-pi, pi]; atan2(0, 0) is pinned to 0.
PolarFrame ExtractAmplitudePhase(const CsiFrame &frame);
double WrappedPhase(double re, double im);

/// Keeps the centred `target_n` subcarriers (logical -target_n/2..target_n/2-1).
/// Throws Error(kBadTarget) unless target_n in {64, 128} and < N;
/// Error(kChainInvalid) if the frame is not in linear order.
void NarrowBandwidth(PolarFrame &frame, std::size_t target_n);
/// Same window applied to complex samples.
void NarrowBandwidth(CsiFrame &frame, std::size_t target_n);

/// Guard/DC subcarriers of the 802.11 layout for N in {64, 128, 256}, as
/// logical indices. Pilots are not included.
std::vector<int> DefaultNullSet(std::size_t n);

/// Zeroes amplitude and phase at every logical index in `null_set`.
/// Throws Error(kIndexOutOfRange) without modifying the frame.
void NullGuardSubcarriers(PolarFrame &frame, std::span<const int> null_set);
void NullGuardSubcarriers(CsiFrame &frame, std::span<const int> null_set);

/// Rescales amplitudes so that sum(a^2) = 10^(rssi_dbm/10). An all-zero frame
/// is left untouched and flagged with zero_power. Returns false in that case.
bool CompensateAgc(PolarFrame &frame, double rssi_dbm);

/// Last smoothed RSSI per transmitter.
struct SmoothingState {
  std::map<MacAddress, double> last_dbm;
};

/// Exponential smoothing, seeded by the first sample of each MAC.
/// Throws Error(kBadAlpha) unless alpha in (0, 1].
double SmoothRssi(SmoothingState &state, const MacAddress &mac, double x_dbm, double alpha);

/// Removes 2 pi jumps along the subcarrier axis: each consecutive difference
/// is brought into (-pi, pi] by adding a multiple of 2 pi to the later sample.
void UnwrapPhases(std::span<double> phases);
void UnwrapPhase(PolarFrame &frame);

/// a * (cos phi + i sin phi)
std::vector<ComplexSample> ReconstructComplex(const PolarFrame &frame);

}  // namespace csiscope
