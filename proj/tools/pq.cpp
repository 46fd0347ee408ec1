// pq: command-line front end over the libpq C interface.

#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "pq/pq.h"

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(pq_status st, const std::string& what) {
  if (st != PQ_OK) {
    const std::string detail = pq_last_error();
    throw Failure(what + ": " + (detail.empty() ? pq_status_string(st) : detail));
  }
}

struct ConfigDeleter {
  void operator()(pq_config* c) const { pq_config_destroy(c); }
};
struct SimDeleter {
  void operator()(pq_simulator* s) const { pq_sim_destroy(s); }
};
struct CaptureDeleter {
  void operator()(pq_capture* c) const { pq_capture_destroy(c); }
};
struct DaemonDeleter {
  void operator()(pq_daemon* d) const { pq_daemon_destroy(d); }
};

struct CommonOptions {
  std::string config_file;
  std::map<std::string, std::string> overrides;
  std::string data_dir = ".";
  std::string session = "latest";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_file, "key = value settings file");
  auto setting = [&](const char* flag, const char* key, const char* help) {
    cmd->add_option_function<std::string>(
        flag, [&o, key](const std::string& v) { o.overrides[key] = v; }, help);
  };
  setting("--vref", "vref_volts", "ADC reference voltage");
  setting("--offset", "offset_volts", "DC offset added before the ADC");
  setting("--ratio", "divider_ratio", "voltage divider ratio");
  setting("--nominal", "nominal_voltage", "nominal RMS voltage");
  setting("--sag-pu", "sag_pu", "sag threshold (per unit)");
  setting("--surge-pu", "surge_pu", "surge threshold (per unit)");
  setting("--interruption-pu", "interruption_pu", "interruption threshold (per unit)");
  cmd->add_option("--data-dir", o.data_dir, "directory holding dataRaw.bin")->envname("PQ_DATA_DIR");
}

std::unique_ptr<pq_config, ConfigDeleter> make_config(const CommonOptions& o) {
  pq_config* raw = nullptr;
  check(pq_config_create(&raw), "config");
  std::unique_ptr<pq_config, ConfigDeleter> cfg(raw);
  if (!o.config_file.empty()) check(pq_config_load_file(cfg.get(), o.config_file.c_str()), "config");
  for (const auto& [key, value] : o.overrides)
    check(pq_config_set(cfg.get(), key.c_str(), value.c_str()), "--" + key);
  check(pq_config_validate(cfg.get()), "config");
  return cfg;
}

long session_index(const std::string& text) {
  if (text == "latest") return PQ_SESSION_LATEST;
  try {
    std::size_t used = 0;
    const long v = std::stol(text, &used);
    if (used == text.size() && v >= 0) return v;
  } catch (const std::exception&) {
  }
  throw Failure("--session must be 'latest' or a session index, got '" + text + "'");
}

int cycles_value(const std::string& text) {
  if (text == "all") return PQ_CYCLES_ALL;
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size() && v >= 1) return v;
  } catch (const std::exception&) {
  }
  throw Failure("--cycles must be a positive integer or 'all', got '" + text + "'");
}

double number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Failure(what + ": '" + text + "' is not a number");
}

struct Disturbance {
  pq_event_kind kind;
  std::uint64_t at = 0;
  std::uint64_t half_cycles = 1;
  double pu = 1.0;
};

// "at=120,half_cycles=1,pu=1.15"
Disturbance parse_disturbance(pq_event_kind kind, const std::string& text) {
  Disturbance d{kind};
  bool have_at = false, have_pu = false;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw Failure("disturbance field '" + field + "' lacks '='");
    const auto key = field.substr(0, eq);
    const auto value = field.substr(eq + 1);
    if (key == "at") {
      d.at = static_cast<std::uint64_t>(number(value, "at"));
      have_at = true;
    } else if (key == "half_cycles") {
      d.half_cycles = static_cast<std::uint64_t>(number(value, "half_cycles"));
    } else if (key == "pu") {
      d.pu = number(value, "pu");
      have_pu = true;
    } else {
      throw Failure("unknown disturbance field '" + key + "'");
    }
  }
  if (!have_at || !have_pu) throw Failure("disturbance needs at=<half_cycle> and pu=<value>");
  return d;
}

// Blocks SIGINT/SIGTERM process-wide so a dedicated thread can sigwait them.
sigset_t block_stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  sigaddset(&set, SIGUSR1);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

int wait_for_signal(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
  return sig;
}

struct SimOptions {
  CommonOptions common;
  double rms = 120.0;
  std::vector<std::string> harmonics;
  std::vector<std::string> sags, surges, interruptions;
  double noise = 0.0;
  std::uint64_t seed = 1;
  std::optional<int> cycles;
  std::string listen = "tcp:127.0.0.1:9600";
  std::string replay;
  std::uint64_t max_readings = 0;
  bool once = false;
};

int run_sim(const SimOptions& o) {
  const auto stop_set = block_stop_signals();
  auto cfg = make_config(o.common);
  pq_simulator* raw = nullptr;
  check(pq_sim_create(o.rms, &raw), "--rms");
  std::unique_ptr<pq_simulator, SimDeleter> sim(raw);

  for (const auto& h : o.harmonics) {
    // "<order>:<relative amplitude>[:<phase degrees>]"
    std::stringstream ss(h);
    std::string order, amp, phase;
    std::getline(ss, order, ':');
    std::getline(ss, amp, ':');
    std::getline(ss, phase, ':');
    if (amp.empty()) throw Failure("--harmonic expects <order>:<amplitude>, got '" + h + "'");
    const double deg = phase.empty() ? 0.0 : number(phase, "--harmonic phase");
    check(pq_sim_add_harmonic(sim.get(), static_cast<int>(number(order, "--harmonic order")),
                              number(amp, "--harmonic amplitude"), deg * 3.14159265358979323846 / 180.0),
          "--harmonic " + h);
  }
  auto add = [&](pq_event_kind kind, const std::vector<std::string>& specs, const char* flag) {
    for (const auto& s : specs) {
      const auto d = parse_disturbance(kind, s);
      check(pq_sim_add_disturbance(sim.get(), d.kind, d.at, d.half_cycles, d.pu),
            std::string(flag) + " " + s);
    }
  };
  add(PQ_EVENT_SAG, o.sags, "--sag");
  add(PQ_EVENT_SURGE, o.surges, "--surge");
  add(PQ_EVENT_INTERRUPTION, o.interruptions, "--interruption");
  if (o.noise > 0.0) check(pq_sim_set_noise(sim.get(), o.noise, o.seed), "--noise");
  if (o.cycles) check(pq_sim_set_loop_cycles(sim.get(), *o.cycles), "--cycles");
  if (!o.replay.empty())
    check(pq_sim_load_replay(sim.get(), o.replay.c_str(), session_index(o.common.session)),
          "--replay");
  check(pq_sim_set_limits(sim.get(), o.max_readings, o.once ? 0 : 1), "limits");
  check(pq_sim_serve(sim.get(), cfg.get(), o.listen.c_str()), "--listen");

  int port = 0;
  check(pq_sim_port(sim.get(), &port), "port");
  std::printf("listening on port %d\n", port);
  std::fflush(stdout);

  wait_for_signal(stop_set);
  std::uint64_t sent = 0;
  pq_sim_readings_sent(sim.get(), &sent);
  check(pq_sim_stop(sim.get()), "stop");
  std::fprintf(stderr, "sent %llu readings\n", static_cast<unsigned long long>(sent));
  return 0;
}

struct CaptureOptions {
  CommonOptions common;
  std::string endpoint;
  int baud = 2000000;
  std::uint64_t readings = 0;
  double seconds = 0.0;
};

int run_capture(const CaptureOptions& o) {
  const auto stop_set = block_stop_signals();
  if (o.endpoint.empty()) throw Failure("--endpoint is required (or set PQ_ENDPOINT)");
  pq_capture* raw = nullptr;
  check(pq_capture_open(o.endpoint.c_str(), o.baud, o.common.data_dir.c_str(), &raw),
        "capture " + o.endpoint);
  std::unique_ptr<pq_capture, CaptureDeleter> cap(raw);

  std::thread watcher([&] {
    if (wait_for_signal(stop_set) != SIGUSR1) pq_capture_stop(cap.get());
  });
  const auto st = pq_capture_run(cap.get(), o.readings, o.seconds);
  const std::string detail = pq_last_error();
  pthread_kill(watcher.native_handle(), SIGUSR1);
  watcher.join();
  if (st != PQ_OK) throw Failure("capture: " + detail);

  std::uint64_t readings = 0, malformed = 0;
  check(pq_capture_counts(cap.get(), &readings, &malformed), "capture");
  std::printf("readings: %llu\nmalformed: %llu\n", static_cast<unsigned long long>(readings),
              static_cast<unsigned long long>(malformed));
  return 0;
}

struct AnalyzeOptions {
  CommonOptions common;
  std::string cycles = "6";
  std::string fft_out;
  bool harmonics = false;
};

int run_analyze(const AnalyzeOptions& o) {
  auto cfg = make_config(o.common);
  const long session = session_index(o.common.session);
  const int cycles = cycles_value(o.cycles);
  const char* dir = o.common.data_dir.c_str();

  pq_window_stats stats{};
  check(pq_analyze(cfg.get(), dir, session, cycles, &stats), "analyze");
  std::printf("session: %s\n", stats.session);
  std::printf("cycles: %d\n", stats.cycles);
  std::printf("VRMS: %.3f V\n", stats.vrms);
  std::printf("Vpeak: %.3f V\n", stats.vpeak);
  if (stats.has_thd)
    std::printf("THD: %.6f (%.3f %%)\n", stats.thd, stats.thd * 100.0);
  else
    std::printf("THD: n/a (needs at least 2 cycles)\n");
  std::printf("frequency: %.0f Hz (referential)\n", stats.nominal_frequency);

  if (o.harmonics && stats.has_thd) {
    double fundamental = 0.0;
    pq_harmonic table[24];
    check(pq_analyze_harmonics(cfg.get(), dir, session, cycles, &fundamental, table), "harmonics");
    std::printf("fundamental: %.6f\n", fundamental);
    for (const auto& h : table)
      std::printf("h%-2d %14.6f%s\n", h.order, h.magnitude, h.is_spike ? "  spike" : "");
  }
  if (!o.fft_out.empty())
    check(pq_analyze_fft_csv(cfg.get(), dir, session, cycles, o.fft_out.c_str()), "--fft-out");
  return 0;
}

int run_report(const CommonOptions& o) {
  auto cfg = make_config(o);
  pq_report_summary summary{};
  std::vector<char> text(1 << 20);
  check(pq_report(cfg.get(), o.data_dir.c_str(), session_index(o.session), &summary, text.data(),
                  text.size()),
        "report");
  std::fputs(text.data(), stdout);
  return 0;
}

struct ServeOptions {
  CommonOptions common;
  std::string listen = "tcp:127.0.0.1:8080";
  std::string static_dir;
};

int run_serve(const ServeOptions& o) {
  const auto stop_set = block_stop_signals();
  auto cfg = make_config(o.common);
  pq_daemon* raw = nullptr;
  check(pq_daemon_create(cfg.get(), o.common.data_dir.c_str(), &raw), "serve");
  std::unique_ptr<pq_daemon, DaemonDeleter> daemon(raw);
  check(pq_daemon_listen(daemon.get(), o.listen.c_str(),
                         o.static_dir.empty() ? nullptr : o.static_dir.c_str()),
        "--listen");
  int port = 0;
  check(pq_daemon_port(daemon.get(), &port), "port");
  std::printf("listening on port %d\n", port);
  std::fflush(stdout);
  wait_for_signal(stop_set);
  check(pq_daemon_stop(daemon.get()), "stop");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residential power-quality monitor"};
  app.require_subcommand(1);

  SimOptions sim;
  auto* sim_cmd = app.add_subcommand("sim", "serve a synthetic or replayed ADC stream over TCP");
  add_common(sim_cmd, sim.common);
  sim_cmd->add_option("--rms", sim.rms, "fundamental RMS voltage");
  sim_cmd->add_option("--harmonic", sim.harmonics, "<order>:<relative amplitude>[:<phase deg>]");
  sim_cmd->add_option("--sag", sim.sags, "at=<half_cycle>,half_cycles=<n>,pu=<value>");
  sim_cmd->add_option("--surge", sim.surges, "at=<half_cycle>,half_cycles=<n>,pu=<value>");
  sim_cmd->add_option("--interruption", sim.interruptions,
                      "at=<half_cycle>,half_cycles=<n>,pu=<value>");
  sim_cmd->add_option("--noise", sim.noise, "Gaussian noise sigma in volts");
  sim_cmd->add_option("--seed", sim.seed, "noise seed");
  sim_cmd->add_option("--cycles", sim.cycles, "cycles per loop (default 60, longer if disturbances need it)");
  sim_cmd->add_option("--listen", sim.listen, "tcp:<host>:<port>");
  sim_cmd->add_option("--replay", sim.replay, "serve a stored dataRaw.bin session");
  sim_cmd->add_option("--session", sim.common.session, "replay session: latest or index");
  sim_cmd->add_option("--max-readings", sim.max_readings, "readings per connection (0 = no cap)");
  sim_cmd->add_flag("--once", sim.once, "play the loop once per connection");

  CaptureOptions cap;
  auto* cap_cmd = app.add_subcommand("capture", "record a device stream into dataRaw.bin");
  add_common(cap_cmd, cap.common);
  cap_cmd->add_option("--endpoint", cap.endpoint, "serial:<device> or tcp:<host>:<port>")
      ->envname("PQ_ENDPOINT");
  cap_cmd->add_option("--baud", cap.baud, "serial baud rate");
  cap_cmd->add_option("--readings", cap.readings, "stop after this many readings");
  cap_cmd->add_option("--seconds", cap.seconds, "stop after this many seconds");

  AnalyzeOptions an;
  auto* an_cmd = app.add_subcommand("analyze", "VRMS, Vpeak and THD of the latest cycles");
  add_common(an_cmd, an.common);
  an_cmd->add_option("--cycles", an.cycles, "number of cycles or 'all'");
  an_cmd->add_option("--session", an.common.session, "latest or session index");
  an_cmd->add_option("--fft-out", an.fft_out, "write bin_hz,magnitude CSV");
  an_cmd->add_flag("--harmonics", an.harmonics, "print the harmonic table");

  CommonOptions rep;
  auto* rep_cmd = app.add_subcommand("report", "classify events and write Report.txt");
  add_common(rep_cmd, rep);
  rep_cmd->add_option("--session", rep.session, "latest or session index");

  ServeOptions srv;
  auto* srv_cmd = app.add_subcommand("serve", "run the HTTP/WebSocket daemon");
  add_common(srv_cmd, srv.common);
  srv_cmd->add_option("--listen", srv.listen, "tcp:<host>:<port>");
  srv_cmd->add_option("--static", srv.static_dir, "directory of web UI files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sim_cmd) return run_sim(sim);
    if (*cap_cmd) return run_capture(cap);
    if (*an_cmd) return run_analyze(an);
    if (*rep_cmd) return run_report(rep);
    if (*srv_cmd) return run_serve(srv);
  } catch (const Failure& e) {
    std::fprintf(stderr, "pq: %s\n", e.what());
    return 1;
  }
  return 2;
}
