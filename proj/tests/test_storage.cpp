#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "pq/error.hpp"
#include "pq/simulator.hpp"
#include "pq/storage.hpp"

using namespace pq;
using namespace pq::storage;

namespace {

Timestamp ts(const char* text) { return *parse_timestamp(text); }

}  // namespace

TEST_CASE("raw writer golden bytes") {
  oracle::TempDir dir("raw");
  const auto path = raw_path(dir.path);
  {
    RawWriter w(path);
    w.begin_session(ts("2020-05-06T16:01:00Z"));
    w.append(AdcReading(17));
    w.append(AdcReading(902));
  }
  CHECK(oracle::read_file(path) == "#2020-05-06T16:01:00Z\n17,902,");
  {
    RawWriter w(path);  // reopen appends and starts the header on a new line
    w.begin_session(ts("2020-05-06T16:02:00Z"));
    w.append(AdcReading(0));
  }
  CHECK(oracle::read_file(path) == "#2020-05-06T16:01:00Z\n17,902,\n#2020-05-06T16:02:00Z\n0,");
}

TEST_CASE("appending outside a session is rejected") {
  oracle::TempDir dir("raw");
  RawWriter w(raw_path(dir.path));
  CHECK_THROWS_AS(w.append(AdcReading(1)), Error);
}

TEST_CASE("append_raw skips malformed events and opens sessions on headers") {
  oracle::TempDir dir("raw");
  const auto path = raw_path(dir.path);
  RawWriter w(path);
  const std::vector<StreamEvent> ev{SessionStart{ts("2021-01-01T00:00:00Z")}, AdcReading(5),
                                    Malformed{"x"}, AdcReading(6)};
  w.append_raw(ev);
  CHECK(w.malformed_skipped() == 1);
  CHECK(w.session_values() == 2);
  CHECK(oracle::read_file(path) == "#2021-01-01T00:00:00Z\n5,6,");
}

TEST_CASE("sessions list and read back") {
  oracle::TempDir dir("raw");
  const auto path = raw_path(dir.path);
  {
    RawWriter w(path);
    w.begin_session(ts("2021-01-01T00:00:00Z"));
    for (int i = 0; i < 10; ++i) w.append(AdcReading(i));
    w.begin_session(ts("2021-01-01T00:05:00Z"));
    for (int i = 0; i < 3; ++i) w.append(AdcReading(1000 + i));
  }
  const auto sessions = list_sessions(path);
  REQUIRE(sessions.size() == 2);
  CHECK(sessions[0].timestamp == "2021-01-01T00:00:00Z");
  CHECK(sessions[0].value_count == 10);
  CHECK(sessions[1].value_count == 3);
  const auto latest = read_session(path);
  CHECK(latest.info.index == 1);
  REQUIRE(latest.readings.size() == 3);
  CHECK(latest.readings[2].count() == 1002);
  CHECK(read_session(path, 0).readings.size() == 10);
  CHECK_THROWS_AS(read_session(path, 2), Error);
  CHECK_THROWS_AS(read_session(dir.path / "missing.bin"), Error);
  CHECK(list_sessions(dir.path / "missing.bin").empty());
}

TEST_CASE("an unterminated trailing value is not part of the snapshot") {
  oracle::TempDir dir("raw");
  const auto path = raw_path(dir.path);
  {
    std::ofstream f(path, std::ios::binary);
    f << "#2021-01-01T00:00:00Z\n1,2,3";
  }
  CHECK(read_session(path).readings.size() == 2);
}

TEST_CASE("corrupt files are reported") {
  oracle::TempDir dir("raw");
  const auto path = raw_path(dir.path);
  {
    std::ofstream f(path, std::ios::binary);
    f << "1,2,";
  }
  CHECK_THROWS_AS(read_session(path), Error);
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "#2021-01-01T00:00:00Z\n1,abc,";
  }
  CHECK_THROWS_AS(read_session(path), Error);
}

TEST_CASE("read_raw_window returns the last whole cycles") {
  oracle::TempDir dir("raw");
  const auto path = raw_path(dir.path);
  {
    RawWriter w(path);
    w.begin_session(ts("2021-01-01T00:00:00Z"));
    for (int i = 0; i < 400; ++i) w.append(AdcReading(i));
  }
  SessionInfo info;
  const auto w = read_raw_window(path, {}, 6, {}, &info);
  CHECK(w.cycles() == 6);
  CHECK(w.start_index() == 40);
  CHECK(w.voltages().front() == doctest::Approx(oracle::counts_to_volts(40)));
  CHECK(info.timestamp == "2021-01-01T00:00:00Z");
  CHECK(read_raw_window(path, {}, std::nullopt, {}).cycles() == 6);
  try {
    read_raw_window(path, {}, 7, {});
    FAIL("expected insufficient data");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::insufficient_data);
    CHECK(std::string(e.what()).find("6 whole cycles") != std::string::npos);
  }
  CHECK_THROWS_AS(read_raw_window(path, {}, 0, {}), Error);
}

TEST_CASE("RMS file golden bytes and block replacement") {
  oracle::TempDir dir("rms");
  const auto path = rms_path(dir.path);
  write_rms(path, {{120.0, 119.9154, 138.1024}, 0, "2021-01-01T00:00:00Z"});
  CHECK(oracle::read_file(path) == "#2021-01-01T00:00:00Z\n120.000,119.915,138.102,");
  write_rms(path, {{1.0}, 0, "2021-01-02T00:00:00Z"});
  write_rms(path, {{2.5, 3.25}, 0, "2021-01-01T00:00:00Z"});
  CHECK(oracle::read_file(path) ==
        "#2021-01-01T00:00:00Z\n2.500,3.250,\n#2021-01-02T00:00:00Z\n1.000,");
  const auto back = read_rms(path, std::string("2021-01-01T00:00:00Z"));
  CHECK(back.values == std::vector<double>{2.5, 3.25});
  CHECK(read_rms(path).session_id == "2021-01-02T00:00:00Z");
  CHECK_THROWS_AS(read_rms(path, std::string("nope")), Error);
}

TEST_CASE("RMS storage is smaller than raw storage") {
  oracle::TempDir dir("ratio");
  const auto readings = sim::quantize(sim::synthesize({}, {}, 60), {});
  {
    RawWriter w(raw_path(dir.path));
    w.begin_session(ts("2021-01-01T00:00:00Z"));
    for (auto r : readings) w.append(r);
  }
  const auto raw = read_session(raw_path(dir.path));
  write_rms(rms_path(dir.path), rms_half_series(to_voltages(raw.readings, {}), raw.info.timestamp));
  CHECK(fs::file_size(rms_path(dir.path)) * 5 < fs::file_size(raw_path(dir.path)));
}

TEST_CASE("report text round-trips through the parser") {
  PqReport r;
  r.session_timestamp = "2021-01-01T00:00:00Z";
  r.half_cycles_analyzed = 240;
  r.sags = 1;
  r.surges = 1;
  r.min_rms_volts = 60.0;
  r.max_rms_volts = 138.102;
  r.events = {{EventKind::sag, 10, 3, 0.5}, {EventKind::surge, 120, 1, 1.151}};
  const auto text = format_report(r);
  CHECK(text.find("surge start_half_cycle=120 duration_half_cycles=1 extreme=1.151 pu (138.120 V)") !=
        std::string::npos);
  const auto back = parse_report(text);
  CHECK(back.session_timestamp == r.session_timestamp);
  CHECK(back.half_cycles_analyzed == 240);
  CHECK(back.sags == 1);
  CHECK(back.surges == 1);
  CHECK(back.interruptions == 0);
  CHECK(back.min_rms_volts == doctest::Approx(60.0));
  CHECK(back.max_rms_volts == doctest::Approx(138.102));
  CHECK(back.thresholds.surge_pu == doctest::Approx(1.1));
  CHECK(back.events == r.events);
  CHECK_THROWS_AS(parse_report("hello\n"), Error);

  oracle::TempDir dir("report");
  write_report_file(report_path(dir.path), r);
  CHECK(read_report_file(report_path(dir.path)).events.size() == 2);
}
