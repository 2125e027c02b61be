#include <doctest.h>

#include <limits>

#include "csiscope/model.hpp"

using namespace csiscope;

namespace {

CsiFrame ValidFrame() {
  CsiFrame f;
  f.timestamp_us = 1'000'000;
  f.rssi_dbm = -55;
  f.bandwidth_mhz = 20;
  f.csi.assign(64, {1.0, -1.0});
  return f;
}

}  // namespace

TEST_CASE("valid 64-subcarrier frame has an empty report") {
  const auto report = ValidateFrame(ValidFrame(), 999'999);
  CHECK(report.ok());
  CHECK(report.violations.empty());
}

TEST_CASE("each invariant maps to a named violation") {
  SUBCASE("subcarrier count") {
    auto f = ValidFrame();
    f.csi.resize(60);
    CHECK(ValidateFrame(f).Has("subcarrier-count"));
  }
  SUBCASE("rssi above 0 dBm") {
    auto f = ValidFrame();
    f.rssi_dbm = 10;
    const auto report = ValidateFrame(f);
    CHECK(report.Has("rssi-range"));
    CHECK(report.violations.size() == 1);
  }
  SUBCASE("rssi below -120 dBm") {
    auto f = ValidFrame();
    f.rssi_dbm = -121;
    CHECK(ValidateFrame(f).Has("rssi-range"));
  }
  SUBCASE("bandwidth must match N") {
    auto f = ValidFrame();
    f.bandwidth_mhz = 40;
    CHECK(ValidateFrame(f).Has("bandwidth-mismatch"));
  }
  SUBCASE("non-finite samples") {
    auto f = ValidFrame();
    f.csi[3].im = std::numeric_limits<double>::quiet_NaN();
    CHECK(ValidateFrame(f).Has("non-finite-sample"));
  }
  SUBCASE("timestamps go backwards") {
    CHECK(ValidateFrame(ValidFrame(), 1'000'001).Has("timestamp-order"));
    CHECK(ValidateFrame(ValidFrame(), 1'000'000).ok());
  }
}

TEST_CASE("several violations are all reported and validation is pure") {
  auto f = ValidFrame();
  f.csi.resize(60);
  f.rssi_dbm = 5;
  const auto a = ValidateFrame(f);
  const auto b = ValidateFrame(f);
  CHECK(a.violations.size() == 2);
  CHECK(a.Summary() == b.Summary());
}

TEST_CASE("bandwidth and subcarrier count tables") {
  CHECK(SubcarriersForBandwidth(20) == 64);
  CHECK(SubcarriersForBandwidth(40) == 128);
  CHECK(SubcarriersForBandwidth(80) == 256);
  CHECK(SubcarriersForBandwidth(160) == 0);
  CHECK(BandwidthForSubcarriers(128) == 40);
  CHECK(BandwidthForSubcarriers(512) == 0);
}

TEST_CASE("MAC parsing and formatting") {
  const auto mac = MacAddress::Parse("AA:bb:0C:dd:ee:0f");
  REQUIRE(mac);
  CHECK(mac->ToString() == "aa:bb:0c:dd:ee:0f");
  CHECK(mac->ToHex12() == "aabb0cddee0f");
  CHECK(MacAddress::Parse("aabb0cddee0f") == mac);
  CHECK(MacAddress::Parse("aa-bb-0c-dd-ee-0f") == mac);
  CHECK_FALSE(MacAddress::Parse("aa:bb:0c:dd:ee"));
  CHECK_FALSE(MacAddress::Parse("aa:bb-0c:dd:ee:0f"));
  CHECK_FALSE(MacAddress::Parse("zz:bb:0c:dd:ee:0f"));
}
