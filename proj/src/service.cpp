#include "pq/service.hpp"

#include "json.hpp"

#include "pq/error.hpp"
#include "pq/storage.hpp"

namespace pq::service {

using json = nlohmann::json;

const char* to_string(ConnectionStatus s) noexcept {
  switch (s) {
    case ConnectionStatus::disconnected: return "disconnected";
    case ConnectionStatus::connecting: return "connecting";
    case ConnectionStatus::streaming: return "streaming";
  }
  return "unknown";
}

WindowView parse_window_view(std::string_view text) {
  if (text.empty() || text == "inst" || text == "instantaneous") return WindowView::instantaneous;
  if (text == "rms" || text == "rms_half") return WindowView::rms_half;
  throw Error(ErrorCode::invalid_argument, "view must be inst or rms, got '" + std::string(text) + "'");
}

void LiveHub::publish(std::string body) {
  {
    std::lock_guard lock(mutex_);
    ++latest_.seq;
    latest_.body = std::move(body);
  }
  cv_.notify_all();
}

std::uint64_t LiveHub::latest_seq() const {
  std::lock_guard lock(mutex_);
  return latest_.seq;
}

std::optional<LiveHub::Message> LiveHub::wait_next(std::uint64_t after,
                                                   std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  if (!cv_.wait_for(lock, timeout, [&] { return latest_.seq > after; })) return std::nullopt;
  return latest_;
}

Daemon::Daemon(Settings settings, std::filesystem::path data_dir)
    : settings_(settings), data_dir_(std::move(data_dir)) {
  settings_.validate();
}

Daemon::~Daemon() {
  try {
    disconnect();
  } catch (...) {
  }
}

void Daemon::join_finished_worker() {
  if (worker_.joinable()) worker_.join();
}

StatusSnapshot Daemon::status() const {
  std::lock_guard lock(state_mutex_);
  return {state_, endpoint_, session_id_, readings_, malformed_, half_cycles_, settings_};
}

std::string Daemon::status_json_locked() const {
  return json{{"type", "status"},     {"status", to_string(state_)}, {"session", session_id_},
              {"readings", readings_}, {"malformed", malformed_},    {"half_cycles", half_cycles_}}
      .dump();
}

StatusSnapshot Daemon::connect(const PortConfig& port) {
  std::lock_guard control(control_mutex_);
  {
    std::lock_guard lock(state_mutex_);
    if (state_ != ConnectionStatus::disconnected)
      throw Error(ErrorCode::conflict, std::string("already ") + to_string(state_));
  }
  join_finished_worker();
  {
    std::lock_guard lock(state_mutex_);
    state_ = ConnectionStatus::connecting;
    endpoint_ = port.endpoint;
  }

  std::unique_ptr<AcquisitionSession> session;
  std::unique_ptr<storage::RawWriter> writer;
  try {
    session = AcquisitionSession::open(port);
    writer = std::make_unique<storage::RawWriter>(storage::raw_path(data_dir_));
    writer->begin_session(session->started_at());
  } catch (...) {
    std::lock_guard lock(state_mutex_);
    state_ = ConnectionStatus::disconnected;
    throw;
  }

  {
    std::lock_guard lock(state_mutex_);
    state_ = ConnectionStatus::streaming;
    session_id_ = format_timestamp(session->started_at());
    readings_ = malformed_ = half_cycles_ = 0;
    active_ = session.get();
    live_.publish(status_json_locked());
  }
  worker_ = std::thread([this, s = std::move(session), w = std::move(writer)]() mutable {
    try {
      auto* session_ptr = s.get();
      std::vector<StreamEvent> events;
      std::vector<double> half;
      half.reserve(kSamplesPerHalfCycle);
      while (session_ptr->read(events, std::chrono::milliseconds(100))) {
        std::uint64_t new_readings = 0, new_malformed = 0;
        std::vector<std::pair<std::uint64_t, double>> completed;
        for (const auto& ev : events) {
          if (const auto* r = std::get_if<AdcReading>(&ev)) {
            w->append(*r);
            ++new_readings;
            half.push_back(adc_to_voltage(*r, settings_.conversion));
            if (half.size() == kSamplesPerHalfCycle) {
              completed.emplace_back(0, dsp::rms(half));
              half.clear();
            }
          } else if (const auto* start = std::get_if<SessionStart>(&ev)) {
            // The acquisition's own start and a device header that precedes
            // any reading describe the session already opened.
            if (w->session_values() > 0) {
              w->begin_session(start->timestamp);
              half.clear();
              std::lock_guard lock(state_mutex_);
              session_id_ = format_timestamp(start->timestamp);
              half_cycles_ = 0;
            }
          } else {
            ++new_malformed;
          }
        }
        events.clear();
        w->flush();

        std::lock_guard lock(state_mutex_);
        readings_ += new_readings;
        malformed_ += new_malformed;
        for (auto& [index, value] : completed) {
          index = half_cycles_++;
          live_.publish(json{{"type", "rms_half"},
                             {"status", to_string(state_)},
                             {"session", session_id_},
                             {"half_cycle", index},
                             {"value", value},
                             {"readings", readings_},
                             {"malformed", malformed_}}
                            .dump());
        }
        if (completed.empty() && new_malformed > 0) live_.publish(status_json_locked());
      }
      w->flush();
    } catch (const std::exception&) {
      // Storage failure ends the session; the state below reports it.
    }
    std::lock_guard lock(state_mutex_);
    state_ = ConnectionStatus::disconnected;
    active_ = nullptr;
    live_.publish(json{{"type", "end"}, {"status", "disconnected"}, {"session", session_id_},
                       {"readings", readings_}, {"malformed", malformed_}}
                      .dump());
  });
  return status();
}

StatusSnapshot Daemon::disconnect() {
  std::lock_guard control(control_mutex_);
  {
    std::lock_guard lock(state_mutex_);
    if (active_) active_->stop();
  }
  join_finished_worker();
  return status();
}

WindowResult Daemon::window(std::optional<int> cycles, WindowView view) const {
  if (cycles && *cycles < 1) throw Error(ErrorCode::invalid_argument, "cycles must be at least 1");
  storage::SessionInfo info;
  const auto win = storage::read_raw_window(storage::raw_path(data_dir_), {}, cycles,
                                            settings_.conversion, &info);
  WindowResult out;
  out.session = info.timestamp;
  out.view = view;
  out.cycles = win.cycles();
  out.start_index = win.start_index();
  out.stats = dsp::analyze_window(win);
  if (view == WindowView::instantaneous) {
    out.points = win.voltages();
  } else {
    out.points = rms_half_series(win.voltages()).values;
  }
  return out;
}

FftResult Daemon::fft(std::optional<int> cycles) const {
  if (cycles && *cycles < 1) throw Error(ErrorCode::invalid_argument, "cycles must be at least 1");
  storage::SessionInfo info;
  const auto win = storage::read_raw_window(storage::raw_path(data_dir_), {}, cycles,
                                            settings_.conversion, &info);
  const auto spectrum = dsp::dft_magnitudes(win);
  return {info.timestamp, win.cycles(), spectrum.bin_hz(), dsp::display_spectrum(spectrum)};
}

PqReport Daemon::report() const {
  const auto raw = storage::read_session(storage::raw_path(data_dir_));
  const auto volts = to_voltages(raw.readings, settings_.conversion);
  const auto series = rms_half_series(volts, raw.info.timestamp);
  storage::write_rms(storage::rms_path(data_dir_), series);
  const auto events = classify_events(series, settings_.conversion, settings_.thresholds);
  auto report = build_report(events, series, settings_.conversion, settings_.thresholds);
  storage::write_report_file(storage::report_path(data_dir_), report);
  return report;
}

}  // namespace pq::service
