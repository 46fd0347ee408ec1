#include "pq/pq.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "pq/dsp.hpp"
#include "pq/error.hpp"
#include "pq/service.hpp"
#include "pq/settings.hpp"
#include "pq/simulator.hpp"
#include "pq/storage.hpp"
#include "pq/wire_protocol.hpp"

struct pq_config {
  pq::Settings settings;
};

struct pq_simulator {
  pq::sim::WaveformSpec spec;
  std::vector<pq::sim::DisturbanceSpec> disturbances;
  int loop_cycles = 60;
  bool loop_cycles_set = false;
  std::optional<std::vector<pq::AdcReading>> replay;
  pq::sim::EmitterOptions options;
  std::unique_ptr<pq::sim::Emitter> emitter;
};

struct pq_capture {
  std::unique_ptr<pq::AcquisitionSession> session;
  std::unique_ptr<pq::storage::RawWriter> writer;
  std::atomic<std::uint64_t> readings{0};
  std::atomic<std::uint64_t> malformed{0};
};

struct pq_daemon {
  std::unique_ptr<pq::service::Daemon> daemon;
  std::unique_ptr<pq::service::HttpServer> http;
};

namespace {

thread_local std::string tl_error;

pq_status to_status(pq::ErrorCode code) {
  using pq::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument: return PQ_ERR_INVALID_ARGUMENT;
    case ErrorCode::domain: return PQ_ERR_DOMAIN;
    case ErrorCode::insufficient_data: return PQ_ERR_INSUFFICIENT_DATA;
    case ErrorCode::degenerate_signal: return PQ_ERR_DEGENERATE_SIGNAL;
    case ErrorCode::io: return PQ_ERR_IO;
    case ErrorCode::connection: return PQ_ERR_CONNECTION;
    case ErrorCode::conflict: return PQ_ERR_CONFLICT;
    case ErrorCode::not_found: return PQ_ERR_NOT_FOUND;
  }
  return PQ_ERR_INTERNAL;
}

template <class F>
pq_status guard(F&& f) noexcept {
  try {
    f();
    tl_error.clear();
    return PQ_OK;
  } catch (const pq::Error& e) {
    tl_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    tl_error = "out of memory";
    return PQ_ERR_INTERNAL;
  } catch (const std::exception& e) {
    tl_error = e.what();
    return PQ_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (!p) throw pq::Error(pq::ErrorCode::invalid_argument, std::string("null pointer: ") + name);
}

pq::storage::SessionSelector selector(long session) {
  if (session == PQ_SESSION_LATEST) return {};
  if (session < 0) throw pq::Error(pq::ErrorCode::invalid_argument, "negative session index");
  return static_cast<std::size_t>(session);
}

std::optional<int> cycle_count(int cycles) {
  if (cycles == PQ_CYCLES_ALL) return std::nullopt;
  if (cycles < 0) throw pq::Error(pq::ErrorCode::invalid_argument, "negative cycle count");
  return cycles;
}

void copy_text(const std::string& s, char* dst, std::size_t cap) {
  if (!dst || cap == 0) return;
  const auto n = std::min(s.size(), cap - 1);
  std::memcpy(dst, s.data(), n);
  dst[n] = '\0';
}

const pq::Settings& settings_of(const pq_config* cfg) {
  static const pq::Settings defaults{};
  return cfg ? cfg->settings : defaults;
}

pq::SampleWindow load_window(const pq_config* cfg, const char* data_dir, long session, int cycles,
                             pq::storage::SessionInfo* info) {
  require(data_dir, "data_dir");
  return pq::storage::read_raw_window(pq::storage::raw_path(data_dir), selector(session),
                                      cycle_count(cycles), settings_of(cfg).conversion, info);
}

}  // namespace

extern "C" {

const char* pq_last_error(void) { return tl_error.c_str(); }

const char* pq_status_string(pq_status status) {
  switch (status) {
    case PQ_OK: return "ok";
    case PQ_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PQ_ERR_DOMAIN: return "domain error";
    case PQ_ERR_INSUFFICIENT_DATA: return "insufficient data";
    case PQ_ERR_DEGENERATE_SIGNAL: return "degenerate signal";
    case PQ_ERR_IO: return "I/O error";
    case PQ_ERR_CONNECTION: return "connection error";
    case PQ_ERR_CONFLICT: return "conflict";
    case PQ_ERR_NOT_FOUND: return "not found";
    case PQ_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

pq_status pq_config_create(pq_config** out) {
  return guard([&] {
    require(out, "out");
    *out = new pq_config();
  });
}

void pq_config_destroy(pq_config* cfg) { delete cfg; }

pq_status pq_config_load_file(pq_config* cfg, const char* path) {
  return guard([&] {
    require(cfg, "cfg");
    require(path, "path");
    pq::Settings updated = cfg->settings;
    pq::load_settings_file(updated, path);
    cfg->settings = updated;
  });
}

pq_status pq_config_set(pq_config* cfg, const char* key, const char* value) {
  return guard([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(value, "value");
    pq::apply_setting(cfg->settings, key, value);
  });
}

pq_status pq_config_get(const pq_config* cfg, const char* key, double* out) {
  return guard([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(out, "out");
    const auto& c = cfg->settings.conversion;
    const auto& t = cfg->settings.thresholds;
    const std::string k = key;
    if (k == "vref_volts") *out = c.vref;
    else if (k == "offset_volts") *out = c.offset;
    else if (k == "divider_ratio") *out = c.ratio;
    else if (k == "nominal_voltage") *out = c.nominal_voltage;
    else if (k == "sag_pu") *out = t.sag_pu;
    else if (k == "surge_pu") *out = t.surge_pu;
    else if (k == "interruption_pu") *out = t.interruption_pu;
    else throw pq::Error(pq::ErrorCode::invalid_argument, "unknown setting '" + k + "'");
  });
}

pq_status pq_config_validate(const pq_config* cfg) {
  return guard([&] {
    require(cfg, "cfg");
    cfg->settings.validate();
  });
}

pq_status pq_divider_ratio(double r_top_ohms, double r_bottom_ohms, double* out) {
  return guard([&] {
    require(out, "out");
    *out = pq::divider_ratio(r_top_ohms, r_bottom_ohms);
  });
}

pq_status pq_adc_to_voltage(const pq_config* cfg, int count, double* out) {
  return guard([&] {
    require(out, "out");
    *out = pq::adc_to_voltage(pq::AdcReading(count), settings_of(cfg).conversion);
  });
}

pq_status pq_voltage_to_adc(const pq_config* cfg, double volts, int* out) {
  return guard([&] {
    require(out, "out");
    *out = pq::voltage_to_adc(volts, settings_of(cfg).conversion).count();
  });
}

pq_status pq_sim_create(double fundamental_rms, pq_simulator** out) {
  return guard([&] {
    require(out, "out");
    auto sim = std::make_unique<pq_simulator>();
    sim->spec.fundamental_rms = fundamental_rms;
    sim->spec.validate();
    *out = sim.release();
  });
}

void pq_sim_destroy(pq_simulator* sim) { delete sim; }

pq_status pq_sim_add_harmonic(pq_simulator* sim, int order, double relative_amplitude,
                              double phase_radians) {
  return guard([&] {
    require(sim, "sim");
    auto spec = sim->spec;
    spec.harmonics.push_back({order, relative_amplitude, phase_radians});
    spec.validate();
    sim->spec = std::move(spec);
  });
}

pq_status pq_sim_set_noise(pq_simulator* sim, double sigma_volts, uint64_t seed) {
  return guard([&] {
    require(sim, "sim");
    auto spec = sim->spec;
    spec.noise_sigma = sigma_volts;
    spec.noise_seed = seed;
    spec.validate();
    sim->spec = std::move(spec);
  });
}

pq_status pq_sim_add_disturbance(pq_simulator* sim, pq_event_kind kind, uint64_t start_half_cycle,
                                 uint64_t duration_half_cycles, double magnitude_pu) {
  return guard([&] {
    require(sim, "sim");
    pq::sim::DisturbanceSpec d;
    switch (kind) {
      case PQ_EVENT_SAG: d.kind = pq::EventKind::sag; break;
      case PQ_EVENT_SURGE: d.kind = pq::EventKind::surge; break;
      case PQ_EVENT_INTERRUPTION: d.kind = pq::EventKind::interruption; break;
      default: throw pq::Error(pq::ErrorCode::invalid_argument, "unknown disturbance kind");
    }
    d.start_half_cycle = start_half_cycle;
    d.duration_half_cycles = duration_half_cycles;
    d.magnitude_pu = magnitude_pu;
    d.validate();
    sim->disturbances.push_back(d);
  });
}

pq_status pq_sim_set_loop_cycles(pq_simulator* sim, int cycles) {
  return guard([&] {
    require(sim, "sim");
    if (cycles < 1) throw pq::Error(pq::ErrorCode::invalid_argument, "loop needs at least one cycle");
    sim->loop_cycles = cycles;
    sim->loop_cycles_set = true;
  });
}

pq_status pq_sim_load_replay(pq_simulator* sim, const char* raw_file, long session) {
  return guard([&] {
    require(sim, "sim");
    require(raw_file, "raw_file");
    auto raw = pq::storage::read_session(raw_file, selector(session));
    if (raw.readings.empty())
      throw pq::Error(pq::ErrorCode::insufficient_data, "replay session holds no readings");
    sim->replay = std::move(raw.readings);
  });
}

pq_status pq_sim_set_limits(pq_simulator* sim, uint64_t max_readings, int loop) {
  return guard([&] {
    require(sim, "sim");
    sim->options.max_readings = max_readings;
    sim->options.loop = loop != 0;
  });
}

pq_status pq_sim_synthesize(const pq_simulator* sim, int n_cycles, double* out, size_t capacity,
                            size_t* written) {
  return guard([&] {
    require(sim, "sim");
    const auto v = pq::sim::synthesize(sim->spec, sim->disturbances, n_cycles);
    const auto n = std::min(capacity, v.size());
    if (n > 0) {
      require(out, "out");
      std::copy_n(v.begin(), n, out);
    }
    if (written) *written = v.size();
  });
}

pq_status pq_sim_serve(pq_simulator* sim, const pq_config* cfg, const char* listen) {
  return guard([&] {
    require(sim, "sim");
    require(listen, "listen");
    if (sim->emitter) throw pq::Error(pq::ErrorCode::conflict, "simulator already serving");
    const auto& conv = settings_of(cfg).conversion;
    conv.validate();
    if (sim->replay) {
      sim->emitter = std::make_unique<pq::sim::Emitter>(*sim->replay, pq::parse_endpoint(listen),
                                                        sim->options);
    } else {
      int cycles = sim->loop_cycles;
      if (!sim->loop_cycles_set) {
        // Default loop grows to hold every disturbance plus a clean cycle.
        for (const auto& d : sim->disturbances) {
          const auto end = d.start_half_cycle + d.duration_half_cycles;
          cycles = std::max(cycles, static_cast<int>((end + 1) / 2 + 1));
        }
      }
      sim->emitter = pq::sim::serve(sim->spec, sim->disturbances, cycles, conv, listen,
                                    sim->options);
    }
  });
}

pq_status pq_sim_port(const pq_simulator* sim, int* out) {
  return guard([&] {
    require(sim, "sim");
    require(out, "out");
    if (!sim->emitter) throw pq::Error(pq::ErrorCode::invalid_argument, "simulator is not serving");
    *out = sim->emitter->port();
  });
}

pq_status pq_sim_readings_sent(const pq_simulator* sim, uint64_t* out) {
  return guard([&] {
    require(sim, "sim");
    require(out, "out");
    *out = sim->emitter ? sim->emitter->readings_sent() : 0;
  });
}

pq_status pq_sim_stop(pq_simulator* sim) {
  return guard([&] {
    require(sim, "sim");
    sim->emitter.reset();
  });
}

pq_status pq_capture_open(const char* endpoint, int baud, const char* data_dir, pq_capture** out) {
  return guard([&] {
    require(endpoint, "endpoint");
    require(data_dir, "data_dir");
    require(out, "out");
    auto cap = std::make_unique<pq_capture>();
    cap->session = pq::AcquisitionSession::open({endpoint, baud > 0 ? baud : pq::kDefaultBaud});
    cap->writer = std::make_unique<pq::storage::RawWriter>(pq::storage::raw_path(data_dir));
    *out = cap.release();
  });
}

void pq_capture_destroy(pq_capture* cap) { delete cap; }

pq_status pq_capture_run(pq_capture* cap, uint64_t max_readings, double max_seconds) {
  return guard([&] {
    require(cap, "cap");
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    std::vector<pq::StreamEvent> events;
    std::vector<pq::StreamEvent> batch;
    bool done = false;
    while (!done && cap->session->read(events, std::chrono::milliseconds(50))) {
      batch.clear();
      for (auto& ev : events) {
        if (std::holds_alternative<pq::AdcReading>(ev)) {
          if (max_readings > 0 && cap->readings >= max_readings) {
            done = true;
            break;
          }
          ++cap->readings;
        } else if (std::holds_alternative<pq::Malformed>(ev)) {
          ++cap->malformed;
        } else if (cap->writer->in_session() && cap->writer->session_values() == 0) {
          continue;  // device header right after our own session start
        }
        batch.push_back(std::move(ev));
      }
      events.clear();
      cap->writer->append_raw(batch);
      if (max_readings > 0 && cap->readings >= max_readings) done = true;
      if (max_seconds > 0 &&
          std::chrono::duration<double>(clock::now() - t0).count() >= max_seconds)
        done = true;
    }
    cap->writer->flush();
  });
}

pq_status pq_capture_stop(pq_capture* cap) {
  return guard([&] {
    require(cap, "cap");
    cap->session->stop();
  });
}

pq_status pq_capture_counts(const pq_capture* cap, uint64_t* readings, uint64_t* malformed) {
  return guard([&] {
    require(cap, "cap");
    if (readings) *readings = cap->readings;
    if (malformed) *malformed = cap->malformed;
  });
}

pq_status pq_analyze(const pq_config* cfg, const char* data_dir, long session, int cycles,
                     pq_window_stats* out) {
  return guard([&] {
    require(out, "out");
    pq::storage::SessionInfo info;
    const auto win = load_window(cfg, data_dir, session, cycles, &info);
    const auto stats = pq::dsp::analyze_window(win);
    *out = pq_window_stats{};
    out->cycles = win.cycles();
    out->start_index = win.start_index();
    out->vrms = stats.vrms;
    out->vpeak = stats.vpeak;
    out->has_thd = stats.thd.has_value();
    out->thd = stats.thd.value_or(0.0);
    out->nominal_frequency = pq::kNominalFrequency;
    copy_text(info.timestamp, out->session, sizeof out->session);
  });
}

pq_status pq_analyze_harmonics(const pq_config* cfg, const char* data_dir, long session, int cycles,
                               double* fundamental, pq_harmonic out[24]) {
  return guard([&] {
    require(out, "out");
    const auto win = load_window(cfg, data_dir, session, cycles, nullptr);
    const auto table = pq::dsp::harmonic_table(pq::dsp::dft_magnitudes(win));
    if (fundamental) *fundamental = table.fundamental;
    for (std::size_t i = 0; i < table.entries.size(); ++i)
      out[i] = {table.entries[i].order, table.entries[i].magnitude, table.entries[i].is_spike ? 1 : 0};
  });
}

pq_status pq_analyze_fft_csv(const pq_config* cfg, const char* data_dir, long session, int cycles,
                             const char* csv_path) {
  return guard([&] {
    require(csv_path, "csv_path");
    const auto win = load_window(cfg, data_dir, session, cycles, nullptr);
    const auto bins = pq::dsp::display_spectrum(pq::dsp::dft_magnitudes(win));
    std::ofstream f(csv_path, std::ios::trunc);
    if (!f) throw pq::Error(pq::ErrorCode::io, std::string("cannot write ") + csv_path);
    f << "bin_hz,magnitude\n";
    char line[64];
    for (const auto& b : bins) {
      std::snprintf(line, sizeof line, "%.4f,%.6f\n", b.hz, b.magnitude);
      f << line;
    }
    if (!f.flush()) throw pq::Error(pq::ErrorCode::io, std::string("cannot write ") + csv_path);
  });
}

pq_status pq_report(const pq_config* cfg, const char* data_dir, long session,
                    pq_report_summary* out, char* report_text, size_t report_capacity) {
  return guard([&] {
    require(data_dir, "data_dir");
    const auto& s = settings_of(cfg);
    const std::filesystem::path dir = data_dir;
    const auto raw = pq::storage::read_session(pq::storage::raw_path(dir), selector(session));
    const auto series =
        pq::rms_half_series(pq::to_voltages(raw.readings, s.conversion), raw.info.timestamp);
    pq::storage::write_rms(pq::storage::rms_path(dir), series);
    const auto events = pq::classify_events(series, s.conversion, s.thresholds);
    const auto report = pq::build_report(events, series, s.conversion, s.thresholds);
    pq::storage::write_report_file(pq::storage::report_path(dir), report);
    if (out) {
      *out = pq_report_summary{};
      out->half_cycles = report.half_cycles_analyzed;
      out->sags = report.sags;
      out->surges = report.surges;
      out->interruptions = report.interruptions;
      out->min_rms_volts = report.min_rms_volts;
      out->max_rms_volts = report.max_rms_volts;
      out->min_pu = report.min_pu();
      out->max_pu = report.max_pu();
      copy_text(report.session_timestamp, out->session, sizeof out->session);
    }
    copy_text(pq::storage::format_report(report), report_text, report_capacity);
  });
}

pq_status pq_daemon_create(const pq_config* cfg, const char* data_dir, pq_daemon** out) {
  return guard([&] {
    require(data_dir, "data_dir");
    require(out, "out");
    auto d = std::make_unique<pq_daemon>();
    d->daemon = std::make_unique<pq::service::Daemon>(settings_of(cfg), data_dir);
    *out = d.release();
  });
}

void pq_daemon_destroy(pq_daemon* daemon) {
  if (!daemon) return;
  daemon->http.reset();
  delete daemon;
}

pq_status pq_daemon_listen(pq_daemon* daemon, const char* listen, const char* static_dir) {
  return guard([&] {
    require(daemon, "daemon");
    require(listen, "listen");
    if (daemon->http) throw pq::Error(pq::ErrorCode::conflict, "daemon already listening");
    const auto ep = pq::parse_endpoint(listen);
    if (ep.kind != pq::Endpoint::Kind::tcp)
      throw pq::Error(pq::ErrorCode::invalid_argument, "daemon listens on tcp:<host>:<port>");
    std::optional<std::filesystem::path> dir;
    if (static_dir && *static_dir) dir = static_dir;
    daemon->http = std::make_unique<pq::service::HttpServer>(*daemon->daemon, ep.host, ep.port, dir);
  });
}

pq_status pq_daemon_port(const pq_daemon* daemon, int* out) {
  return guard([&] {
    require(daemon, "daemon");
    require(out, "out");
    if (!daemon->http) throw pq::Error(pq::ErrorCode::invalid_argument, "daemon is not listening");
    *out = daemon->http->port();
  });
}

pq_status pq_daemon_stop(pq_daemon* daemon) {
  return guard([&] {
    require(daemon, "daemon");
    if (daemon->http) daemon->http->stop();
    daemon->daemon->disconnect();
  });
}

}  // extern "C"
