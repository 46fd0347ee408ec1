#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "pq/error.hpp"
#include "pq/settings.hpp"

using namespace pq;

TEST_CASE("defaults") {
  Settings s;
  CHECK(s.conversion.vref == 5.0);
  CHECK(s.conversion.offset == 3.3);
  CHECK(s.conversion.ratio == 0.005);
  CHECK(s.conversion.nominal_voltage == 120.0);
  CHECK(s.thresholds.sag_pu == 0.9);
  CHECK(s.thresholds.surge_pu == 1.1);
  CHECK(s.thresholds.interruption_pu == 0.1);
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("apply_setting updates each key") {
  Settings s;
  apply_setting(s, "vref_volts", "4.5");
  apply_setting(s, "offset_volts", " 2.5 ");
  apply_setting(s, "divider_ratio", "0.004");
  apply_setting(s, "nominal_voltage", "127");
  apply_setting(s, "sag_pu", "0.85");
  apply_setting(s, "surge_pu", "1.15");
  apply_setting(s, "interruption_pu", "0.05");
  CHECK(s.conversion.vref == 4.5);
  CHECK(s.conversion.offset == 2.5);
  CHECK(s.conversion.ratio == 0.004);
  CHECK(s.conversion.nominal_voltage == 127.0);
  CHECK(s.thresholds.sag_pu == 0.85);
  CHECK(s.thresholds.surge_pu == 1.15);
  CHECK(s.thresholds.interruption_pu == 0.05);
}

TEST_CASE("apply_setting rejects unknown keys and bad numbers") {
  Settings s;
  CHECK_THROWS_AS(apply_setting(s, "bogus", "1"), Error);
  CHECK_THROWS_AS(apply_setting(s, "vref_volts", "five"), Error);
  CHECK_THROWS_AS(apply_setting(s, "vref_volts", ""), Error);
  CHECK_THROWS_AS(apply_setting(s, "vref_volts", "inf"), Error);
}

TEST_CASE("threshold ordering is validated") {
  Settings s;
  s.thresholds.sag_pu = 0.05;
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.thresholds.surge_pu = 0.95;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("load_settings_file reads key = value lines") {
  oracle::TempDir dir("settings");
  const auto path = dir.path / "pq.conf";
  {
    std::ofstream f(path);
    f << "# calibration\n\nvref_volts = 4.9\n  divider_ratio=0.0049\nsag_pu = 0.88\n";
  }
  Settings s;
  load_settings_file(s, path);
  CHECK(s.conversion.vref == 4.9);
  CHECK(s.conversion.ratio == 0.0049);
  CHECK(s.thresholds.sag_pu == 0.88);
}

TEST_CASE("load_settings_file reports the offending line") {
  oracle::TempDir dir("settings");
  const auto path = dir.path / "bad.conf";
  {
    std::ofstream f(path);
    f << "vref_volts = 5\nnot a setting\n";
  }
  Settings s;
  try {
    load_settings_file(s, path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_argument);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  CHECK_THROWS_AS(load_settings_file(s, dir.path / "missing.conf"), Error);
}
