// Acceptance suite. `pq_acceptance` runs every criterion; `pq_acceptance N`
// runs criterion N. One PASS/FAIL line is printed per criterion and the exit
// status is nonzero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "process.hpp"
#include "pq/dsp.hpp"
#include "pq/events.hpp"
#include "pq/service.hpp"
#include "pq/simulator.hpp"
#include "pq/storage.hpp"

using namespace pq;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

const std::string kPq = PQ_CLI_PATH;

// Collects sub-check outcomes for one criterion.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failed_ = true;
    notes_.push_back((ok ? "" : "FAILED ") + what);
  }
  bool ok() const { return !failed_; }
  std::string detail() const {
    std::string out;
    for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
    return out;
  }

 private:
  bool failed_ = false;
  std::vector<std::string> notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::optional<double> field(const std::string& text, const std::string& key) {
  const std::regex re(key + ": ([-0-9.eE+]+)");
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  return std::stod(m[1]);
}

// 1: simulator -> capture -> analyze through the CLI.
void end_to_end_calibration(Checks& c) {
  oracle::TempDir dir("accept1");
  const auto t0 = std::chrono::steady_clock::now();
  proc::Background sim({kPq, "sim", "--rms", "120", "--listen", "tcp:127.0.0.1:0"});
  c.expect(sim.port() > 0, "simulator started");
  const auto cap = proc::run({kPq, "capture", "--endpoint",
                              "tcp:127.0.0.1:" + std::to_string(sim.port()), "--readings", "360",
                              "--data-dir", dir.path.string()});
  c.expect(cap.exit_code == 0, "capture exit 0");
  sim.stop();
  const auto an = proc::run({kPq, "analyze", "--cycles", "6", "--data-dir", dir.path.string()});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(an.exit_code == 0, "analyze exit 0");

  const auto vrms = field(an.output, "VRMS");
  const auto vpeak = field(an.output, "Vpeak");
  const auto thd = field(an.output, "THD");
  c.expect(vrms && std::abs(*vrms - 120.0) <= 0.5, "VRMS " + fmt("%.3f", vrms.value_or(NAN)) + " (120 +/- 0.5)");
  c.expect(vpeak && std::abs(*vpeak - 169.7) <= 1.5,
           "Vpeak " + fmt("%.3f", vpeak.value_or(NAN)) + " (169.7 +/- 1.5)");
  c.expect(thd && std::abs(*thd) <= 0.001, "THD " + fmt("%.6f", thd.value_or(NAN)) + " (0 +/- 0.001)");
  c.expect(seconds < 5.0, "runtime " + fmt("%.2f", seconds) + " s (< 5 s)");
}

// 2: THD of the ideal sine-plus-harmonics construction.
void thd_accuracy(Checks& c) {
  auto run = [&](const std::vector<sim::Harmonic>& hs, int want_spikes,
                 const std::vector<int>& spike_orders, const std::string& label) {
    sim::WaveformSpec spec;
    spec.harmonics = hs;
    std::vector<std::pair<int, double>> oh;
    for (const auto& h : hs) oh.emplace_back(h.order, h.relative_amplitude);
    for (int cycles = 2; cycles <= 6; ++cycles) {
      const SampleWindow w(sim::synthesize(spec, {}, cycles), cycles);
      const auto table = dsp::harmonic_table(dsp::dft_magnitudes(w));
      const double t = dsp::thd(table);
      const double ref = oracle::direct_thd(oracle::sine(120.0, cycles, oh), cycles);
      bool orders_ok = true;
      for (const auto& e : table.entries) {
        const bool expected = std::find(spike_orders.begin(), spike_orders.end(), e.order) != spike_orders.end();
        orders_ok = orders_ok && e.is_spike == expected;
      }
      const std::string tag = label + " cycles=" + std::to_string(cycles);
      c.expect(std::abs(t - 0.5) <= 0.005, tag + " THD " + fmt("%.6f", t));
      c.expect(std::abs(t - ref) <= 1e-9, tag + " matches direct oracle " + fmt("%.6f", ref));
      c.expect(table.spike_count() == want_spikes && orders_ok,
               tag + " spikes " + std::to_string(table.spike_count()));
    }
  };
  run({{3, 0.5, 0.0}}, 1, {3}, "{h3:0.5}");
  run({{3, 0.3, 0.0}, {5, 0.4, 0.0}}, 2, {3, 5}, "{h3:0.3,h5:0.4}");
}

// 3: a one-half-cycle 1.15 pu surge through sim, capture and report.
void surge_reproduction(Checks& c) {
  oracle::TempDir dir("accept3");
  proc::Background sim({kPq, "sim", "--rms", "120", "--surge", "at=120,half_cycles=1,pu=1.15",
                        "--listen", "tcp:127.0.0.1:0"});
  c.expect(sim.port() > 0, "simulator started");
  // Default loop holds the surge plus one clean cycle: 62 cycles.
  const auto cap = proc::run({kPq, "capture", "--endpoint",
                              "tcp:127.0.0.1:" + std::to_string(sim.port()), "--readings",
                              std::to_string(62 * 60), "--data-dir", dir.path.string()});
  sim.stop();
  c.expect(cap.exit_code == 0, "capture exit 0");
  const auto rep = proc::run({kPq, "report", "--data-dir", dir.path.string()});
  c.expect(rep.exit_code == 0, "report exit 0");

  const auto report = storage::read_report_file(storage::report_path(dir.path));
  c.expect(report.surges == 1, "surges " + std::to_string(report.surges));
  c.expect(report.sags == 0 && report.interruptions == 0,
           "sags " + std::to_string(report.sags) + " interruptions " + std::to_string(report.interruptions));
  c.expect(report.events.size() == 1 && report.events[0].duration_half_cycles == 1 &&
               report.events[0].start_half_cycle == 120,
           "one event at half-cycle 120 lasting 1");
  c.expect(rep.output.find("1 voltage surge took place.") != std::string::npos, "summary line");
}

// 4: fast DFT against the O(L^2) direct sum, plus Parseval.
void dft_oracle_equivalence(Checks& c) {
  std::mt19937_64 rng(20240501);
  std::uniform_real_distribution<double> value(-1000.0, 1000.0);
  double worst_rel = 0.0, worst_parseval = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int cycles = 1 + static_cast<int>(rng() % 6);
    std::vector<double> x(static_cast<std::size_t>(cycles) * 60);
    for (auto& v : x) v = value(rng);
    const auto fast = dsp::dft_magnitudes(SampleWindow(x, cycles)).magnitudes;
    const auto ref = oracle::direct_dft(x);
    double peak = 0.0;
    for (const auto& r : ref) peak = std::max(peak, std::abs(r));
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double m = std::abs(ref[k]);
      worst_rel = std::max(worst_rel, std::abs(fast[k] - m) / std::max(m, 1e-3 * peak));
    }
    double t = 0.0, f = 0.0;
    for (double v : x) t += v * v;
    for (double m : fast) f += m * m;
    worst_parseval = std::max(worst_parseval, std::abs(f / static_cast<double>(x.size()) - t) / t);
  }
  c.expect(worst_rel <= 1e-9, "worst relative bin error " + fmt("%.2e", worst_rel) + " (<= 1e-9)");
  c.expect(worst_parseval <= 1e-6, "worst Parseval error " + fmt("%.2e", worst_parseval) + " (<= 1e-6)");
}

// 5: on-disk formats.
void format_golden(Checks& c) {
  oracle::TempDir dir("accept5");
  const auto readings = sim::quantize(sim::synthesize({}, {}, 6), {});
  const auto ts = *parse_timestamp("2020-05-06T16:01:00Z");
  {
    storage::RawWriter w(storage::raw_path(dir.path));
    w.begin_session(ts);
    for (auto r : readings) w.append(r);
  }
  std::string expected = "#2020-05-06T16:01:00Z\n";
  for (auto r : readings) expected += std::to_string(r.count()) + ",";
  const auto raw = oracle::read_file(storage::raw_path(dir.path));
  c.expect(raw == expected, "dataRaw.bin byte-exact (" + std::to_string(raw.size()) + " bytes)");

  const auto session = storage::read_session(storage::raw_path(dir.path));
  storage::write_rms(storage::rms_path(dir.path),
                     rms_half_series(to_voltages(session.readings, {}), session.info.timestamp));
  const auto rms_text = oracle::read_file(storage::rms_path(dir.path));
  const std::regex grammar("#2020-05-06T16:01:00Z\n(-?[0-9]+\\.[0-9]{3},){12}");
  c.expect(std::regex_match(rms_text, grammar), "dataRMS.bin holds exactly 12 three-decimal values");

  oracle::TempDir big("accept5_60s");
  const auto minute = sim::quantize(sim::synthesize({}, {}, 3600), {});
  {
    storage::RawWriter w(storage::raw_path(big.path));
    w.begin_session(ts);
    for (auto r : minute) w.append(r);
  }
  const auto s60 = storage::read_session(storage::raw_path(big.path));
  storage::write_rms(storage::rms_path(big.path),
                     rms_half_series(to_voltages(s60.readings, {}), s60.info.timestamp));
  const double ratio = static_cast<double>(fs::file_size(storage::rms_path(big.path))) /
                       static_cast<double>(fs::file_size(storage::raw_path(big.path)));
  c.expect(s60.readings.size() == 216000, "60 s session holds 216000 readings");
  c.expect(ratio < 0.2, "RMS/raw size ratio " + fmt("%.4f", ratio) + " (< 0.2)");
}

// 6: sustained ingest and chunking invariance.
void throughput(Checks& c) {
  oracle::TempDir dir("accept6");
  constexpr std::uint64_t kReadings = 3600 * 60;
  sim::WaveformSpec spec;
  spec.harmonics = {{3, 0.1, 0.0}, {7, 0.05, 0.3}};
  const auto source = sim::quantize(sim::synthesize(spec, {}, 60), {});
  sim::EmitterOptions opt;
  opt.max_readings = kReadings;
  sim::Emitter em(source, parse_endpoint("tcp:127.0.0.1:0"), opt);

  service::Daemon daemon({}, dir.path);
  const auto t0 = std::chrono::steady_clock::now();
  daemon.connect({"tcp:127.0.0.1:" + std::to_string(em.port())});
  while (daemon.status().status != service::ConnectionStatus::disconnected &&
         std::chrono::steady_clock::now() - t0 < 120s)
    std::this_thread::sleep_for(50ms);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto st = daemon.status();

  const auto stored = storage::read_session(storage::raw_path(dir.path));
  bool identical = stored.readings.size() == kReadings;
  for (std::size_t i = 0; identical && i < stored.readings.size(); ++i)
    identical = stored.readings[i] == source[i % source.size()];
  c.expect(em.readings_sent() == kReadings, "sent " + std::to_string(em.readings_sent()));
  c.expect(st.readings == kReadings && identical,
           "stored " + std::to_string(stored.readings.size()) + " readings, identical to source");
  c.expect(st.malformed == 0, "malformed " + std::to_string(st.malformed));
  c.expect(seconds >= 59.0 && seconds < 63.0, "paced run " + fmt("%.2f", seconds) + " s at 3600/s");

  // Chunk-boundary fuzzing of the decoder.
  std::mt19937_64 rng(6);
  std::string stream = encode_session_header(*parse_timestamp("2020-05-06T16:01:00Z"));
  for (int i = 0; i < 3000; ++i) {
    switch (rng() % 16) {
      case 0: stream += "x9\r\n"; break;
      case 1: stream += std::string(70, '7') + "\r\n"; break;
      case 2: stream += "\r\n"; break;
      case 3: stream += "2048\n"; break;
      default: stream += encode_reading(AdcReading(static_cast<int>(rng() % 1024)));
    }
  }
  const auto whole = decode_stream(stream);
  bool same = true;
  for (int trial = 0; trial < 500 && same; ++trial) {
    StreamDecoder d;
    std::vector<StreamEvent> out;
    std::size_t pos = 0;
    while (pos < stream.size()) {
      const std::size_t len = trial == 0 ? 1 : 1 + rng() % (trial % 2 ? 7 : 300);
      d.feed(std::string_view(stream).substr(pos, len), out);
      pos += len;
    }
    same = out == whole;
  }
  c.expect(same, "decode_stream identical under 500 chunkings incl. byte-by-byte");
}

// 7: invariants over random inputs.
void property_suite(Checks& c) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> amp(0.0, 0.5), scale(0.001, 100.0), value(-500.0, 500.0);
  bool scaling = true, rms_peak = true, spikes = true, lengths = true;
  for (int trial = 0; trial < 300; ++trial) {
    const int cycles = 2 + static_cast<int>(rng() % 5);
    sim::WaveformSpec spec;
    spec.harmonics = {{static_cast<int>(2 + rng() % 12), amp(rng), 0.0},
                      {static_cast<int>(14 + rng() % 12), amp(rng), 1.0}};
    spec.noise_sigma = trial % 3 == 0 ? 0.5 : 0.0;
    spec.noise_seed = rng();
    const auto base = sim::synthesize(spec, {}, cycles);
    const double a = scale(rng);
    auto scaled = base;
    for (auto& v : scaled) v *= a;
    const auto s0 = dsp::analyze_window(SampleWindow(base, cycles));
    const auto s1 = dsp::analyze_window(SampleWindow(scaled, cycles));
    scaling = scaling && std::abs(s1.vrms - a * s0.vrms) <= 1e-12 * a * s0.vrms &&
              std::abs(s1.vpeak - a * s0.vpeak) <= 1e-12 * a * s0.vpeak &&
              std::abs(*s1.thd - *s0.thd) <= 1e-9 * std::max(*s0.thd, 1e-6);
    rms_peak = rms_peak && s0.vrms <= s0.vpeak;
    spikes = spikes && dsp::thd(*s0.harmonics) <= dsp::thd_unfiltered(*s0.harmonics);

    std::vector<double> x(1 + rng() % 2000);
    for (auto& v : x) v = value(rng);
    rms_peak = rms_peak && dsp::rms(x) <= dsp::peak(x);
    if (x.size() >= 60) {
      const auto w = dsp::trim_to_whole_cycles(x);
      lengths = lengths && w.size() == (x.size() / 60) * 60 && w.start_index() == x.size() % 60;
    }
    if (x.size() >= 30) lengths = lengths && rms_half_series(x).values.size() == x.size() / 30;
  }
  c.expect(scaling, "RMS/peak scale linearly, THD scale-invariant");
  c.expect(rms_peak, "rms <= peak");
  c.expect(spikes, "filtered THD <= unfiltered THD");
  c.expect(lengths, "trim and RMS half-cycle length arithmetic");
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Checks&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "end_to_end_calibration", end_to_end_calibration},
      {2, "thd_accuracy", thd_accuracy},
      {3, "surge_reproduction", surge_reproduction},
      {4, "dft_oracle_equivalence", dft_oracle_equivalence},
      {5, "format_golden", format_golden},
      {6, "throughput", throughput},
      {7, "property_suite", property_suite},
  };
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  bool all_ok = true;
  for (const auto& cr : all) {
    if (only && cr.id != only) continue;
    Checks c;
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::printf("[%s] criterion %d %s: %s\n", c.ok() ? "PASS" : "FAIL", cr.id, cr.name,
                c.detail().c_str());
    std::fflush(stdout);
    all_ok = all_ok && c.ok();
  }
  return all_ok ? 0 : 1;
}
