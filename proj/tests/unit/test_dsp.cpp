#include <doctest.h>

#include <cmath>
#include <numbers>

#include "csiscope/dsp.hpp"
#include "csiscope/error.hpp"
#include "support/oracles.hpp"

using namespace csiscope;

namespace {

constexpr double kPi = std::numbers::pi;

PolarFrame LinearPolar(std::size_t n) {
  PolarFrame p;
  p.meta.n_subcarriers = n;
  p.meta.bandwidth_mhz = BandwidthForSubcarriers(n);
  p.meta.subcarrier_order = SubcarrierOrder::kLinear;
  p.amplitudes.resize(n);
  p.phases.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.amplitudes[i] = 1.0 + static_cast<double>(i);
    p.phases[i] = 0.01 * static_cast<double>(i);
  }
  return p;
}

ErrorCode CodeOf(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidFrame;
}

}  // namespace

TEST_CASE("MAC filtering") {
  CsiFrame f;
  const auto a = *MacAddress::Parse("aa:aa:aa:aa:aa:aa");
  const auto b = *MacAddress::Parse("bb:bb:bb:bb:bb:bb");
  f.source_mac = a;
  CHECK(FilterMac(f, {a}).has_value());
  f.source_mac = b;
  CHECK_FALSE(FilterMac(f, {a}).has_value());
  CHECK(FilterMac(f, {}).has_value());
  // Filtering a passed frame again changes nothing.
  CHECK(FilterMac(*FilterMac(f, {b}), {b}) == f);
}

TEST_CASE("reorder N=4 example and AlreadyLinear") {
  CsiFrame f;
  f.csi = {{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  CHECK(ReorderSubcarriers(f) == ReorderOutcome::kReordered);
  CHECK(f.csi == std::vector<ComplexSample>{{2, 0}, {3, 0}, {0, 0}, {1, 0}});
  CHECK(f.subcarrier_order == SubcarrierOrder::kLinear);
  const auto before = f;
  CHECK(ReorderSubcarriers(f) == ReorderOutcome::kAlreadyLinear);
  CHECK(f == before);
}

TEST_CASE("reorder matches the logical-index oracle and inverts exactly") {
  for (const std::size_t n : {64u, 128u, 256u}) {
    std::vector<std::size_t> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = i;
    auto permuted = values;
    FftToLinear(permuted);
    CHECK(permuted == oracle::LinearSourceSlots(n));
    // Inverse: linear position p came from slot permuted[p].
    std::vector<std::size_t> restored(n);
    for (std::size_t p = 0; p < n; ++p) restored[permuted[p]] = p;
    std::vector<std::size_t> round_trip(n);
    for (std::size_t i = 0; i < n; ++i) round_trip[i] = permuted[restored[i]];
    CHECK(round_trip == values);
  }
}

TEST_CASE("amplitude/phase extraction examples") {
  CsiFrame f;
  f.csi = {{3, 4}, {0, 0}, {-1, 0}, {-1, -0.0}, {0, -2}};
  const auto p = ExtractAmplitudePhase(f);
  CHECK(p.amplitudes[0] == 5.0);
  CHECK(p.phases[0] == doctest::Approx(0.927295).epsilon(1e-6));
  CHECK(p.amplitudes[1] == 0.0);
  CHECK(p.phases[1] == 0.0);
  CHECK(p.amplitudes[2] == 1.0);
  CHECK(p.phases[2] == kPi);
  CHECK(p.phases[3] == kPi);
  CHECK(p.phases[4] == doctest::Approx(-kPi / 2));
  CHECK(p.meta.n_subcarriers == 5);
}

TEST_CASE("extraction is lossless") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const auto f = oracle::RandomContinuousFrame(rng, 64);
    const auto back = ReconstructComplex(ExtractAmplitudePhase(f));
    for (std::size_t i = 0; i < 64; ++i) {
      CHECK(std::abs(back[i].re - f.csi[i].re) <= 1e-9);
      CHECK(std::abs(back[i].im - f.csi[i].im) <= 1e-9);
    }
  }
}

TEST_CASE("bandwidth narrowing windows") {
  auto p = LinearPolar(256);
  NarrowBandwidth(p, 64);
  REQUIRE(p.amplitudes.size() == 64);
  CHECK(p.amplitudes.front() == 1.0 + 96);
  CHECK(p.amplitudes.back() == 1.0 + 159);
  CHECK(p.meta.n_subcarriers == 64);
  CHECK(p.meta.bandwidth_mhz == 20);

  auto q = LinearPolar(128);
  NarrowBandwidth(q, 64);
  CHECK(q.amplitudes.front() == 1.0 + 32);
  CHECK(q.amplitudes.back() == 1.0 + 95);

  auto r = LinearPolar(64);
  CHECK(CodeOf([&] { NarrowBandwidth(r, 64); }) == ErrorCode::kBadTarget);
  auto s = LinearPolar(256);
  CHECK(CodeOf([&] { NarrowBandwidth(s, 32); }) == ErrorCode::kBadTarget);
  auto t = LinearPolar(256);
  t.meta.subcarrier_order = SubcarrierOrder::kFft;
  CHECK(CodeOf([&] { NarrowBandwidth(t, 64); }) == ErrorCode::kChainInvalid);
}

TEST_CASE("default null sets follow the 802.11 occupied-subcarrier tables") {
  struct Layout {
    std::size_t n;
    int lo_edge;   // occupied: lo_edge..-dc_min and dc_min..hi_edge
    int dc_min;
  };
  for (const Layout l : {Layout{64, 28, 1}, Layout{128, 58, 2}, Layout{256, 122, 2}}) {
    std::vector<int> expected;
    const int half = static_cast<int>(l.n / 2);
    for (int k = -half; k < half; ++k) {
      const bool occupied = std::abs(k) >= l.dc_min && std::abs(k) <= l.lo_edge;
      if (!occupied) expected.push_back(k);
    }
    CHECK(DefaultNullSet(l.n) == expected);
  }
  CHECK(DefaultNullSet(64) == std::vector<int>{-32, -31, -30, -29, 0, 29, 30, 31});
  CHECK(DefaultNullSet(64).size() == 8);
}

TEST_CASE("null guard zeroes exactly the listed positions") {
  auto p = LinearPolar(64);
  const auto original = p;
  const auto set = DefaultNullSet(64);
  NullGuardSubcarriers(p, set);
  int zeroed = 0;
  for (std::size_t i = 0; i < 64; ++i) {
    const int logical = static_cast<int>(i) - 32;
    if (std::find(set.begin(), set.end(), logical) != set.end()) {
      CHECK(p.amplitudes[i] == 0.0);
      CHECK(p.phases[i] == 0.0);
      ++zeroed;
    } else {
      CHECK(p.amplitudes[i] == original.amplitudes[i]);
      CHECK(p.phases[i] == original.phases[i]);
    }
  }
  CHECK(zeroed == 8);
  const auto once = p;
  NullGuardSubcarriers(p, set);
  CHECK(p == once);

  auto q = LinearPolar(64);
  NullGuardSubcarriers(q, std::vector<int>{});
  CHECK(q == original);

  auto r = LinearPolar(64);
  CHECK(CodeOf([&] { NullGuardSubcarriers(r, std::vector<int>{0, 32}); }) ==
        ErrorCode::kIndexOutOfRange);
  CHECK(r == original);
}

TEST_CASE("AGC compensation") {
  PolarFrame p;
  p.amplitudes = {1.0, 1.0};
  p.phases = {0.3, -0.3};
  CHECK(CompensateAgc(p, -40.0));
  // sum a'^2 must equal 10^(-40/10) = 1e-4, so each a' = sqrt(5e-5).
  CHECK(p.amplitudes[0] == doctest::Approx(7.0711e-3).epsilon(1e-4));
  CHECK(p.amplitudes[0] * p.amplitudes[0] + p.amplitudes[1] * p.amplitudes[1] ==
        doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(p.phases == std::vector<double>{0.3, -0.3});

  PolarFrame unit;
  unit.amplitudes = {0.6, 0.8};
  unit.phases = {0, 0};
  CompensateAgc(unit, 0.0);
  CHECK(unit.amplitudes[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(unit.amplitudes[1] == doctest::Approx(0.8).epsilon(1e-15));

  PolarFrame zero;
  zero.amplitudes = {0, 0, 0};
  zero.phases = {1, 2, 3};
  const auto before = zero;
  CHECK_FALSE(CompensateAgc(zero, -50.0));
  CHECK(zero.zero_power);
  CHECK(zero.amplitudes == before.amplitudes);
  CHECK(zero.phases == before.phases);
}

TEST_CASE("RSSI smoothing") {
  const auto mac = *MacAddress::Parse("02:00:00:00:00:01");
  const auto other = *MacAddress::Parse("02:00:00:00:00:02");
  SUBCASE("alpha 1 is the identity") {
    SmoothingState s;
    for (const double x : {-50.0, -30.0, -70.0, -41.5}) CHECK(SmoothRssi(s, mac, x, 1.0) == x);
  }
  SUBCASE("first sample seeds, then blends") {
    SmoothingState s;
    CHECK(SmoothRssi(s, mac, -50.0, 0.5) == -50.0);
    CHECK(SmoothRssi(s, mac, -40.0, 0.5) == -45.0);
    CHECK(SmoothRssi(s, other, -70.0, 0.5) == -70.0);
  }
  SUBCASE("alpha outside (0, 1]") {
    SmoothingState s;
    CHECK(CodeOf([&] { SmoothRssi(s, mac, -50.0, 0.0); }) == ErrorCode::kBadAlpha);
    CHECK(CodeOf([&] { SmoothRssi(s, mac, -50.0, 1.5); }) == ErrorCode::kBadAlpha);
    CHECK(s.last_dbm.empty());
  }
  SUBCASE("output stays within the range of inputs seen") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> x(-90.0, -20.0);
    std::uniform_real_distribution<double> alpha(0.01, 1.0);
    SmoothingState s;
    double lo = 1e9;
    double hi = -1e9;
    for (int i = 0; i < 2000; ++i) {
      const double v = x(rng);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      const double out = SmoothRssi(s, mac, v, alpha(rng));
      CHECK(out >= lo - 1e-12);
      CHECK(out <= hi + 1e-12);
    }
  }
}

TEST_CASE("phase unwrapping examples") {
  std::vector<double> a = {0.1, 6.2};
  UnwrapPhases(a);
  CHECK(a[0] == 0.1);
  CHECK(a[1] == doctest::Approx(6.2 - 2 * kPi).epsilon(1e-15));
  CHECK(a[1] == doctest::Approx(-0.083185).epsilon(1e-5));
  // Itoh reference agrees.
  CHECK(oracle::ItohUnwrap({0.1, 6.2})[1] == doctest::Approx(a[1]));

  std::vector<double> flat = {1, 1, 1, 1};
  UnwrapPhases(flat);
  CHECK(flat == std::vector<double>{1, 1, 1, 1});

  std::vector<double> ramp = {-3.0, -1.5, 0.0, 1.5, 3.0};
  const auto ramp_before = ramp;
  UnwrapPhases(ramp);
  CHECK(ramp == ramp_before);

  std::vector<double> empty;
  UnwrapPhases(empty);
  CHECK(empty.empty());
}

TEST_CASE("unwrapping agrees with the Itoh reference on random wrapped ramps") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> slope(-2.5, 2.5);
  std::normal_distribution<double> wobble(0.0, 0.3);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> phases(64);
    const double s = slope(rng);
    for (std::size_t i = 0; i < 64; ++i) {
      const double truth = s * static_cast<double>(i) + wobble(rng);
      phases[i] = std::remainder(truth, 2 * kPi);
    }
    const auto expected = oracle::ItohUnwrap(phases);
    auto got = phases;
    UnwrapPhases(got);
    for (std::size_t i = 0; i < 64; ++i) CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  }
}
