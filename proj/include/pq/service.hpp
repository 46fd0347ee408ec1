#ifndef PQ_SERVICE_HPP
#define PQ_SERVICE_HPP

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pq/dsp.hpp"
#include "pq/events.hpp"
#include "pq/settings.hpp"
#include "pq/wire_protocol.hpp"

namespace pq::service {

enum class ConnectionStatus { disconnected, connecting, streaming };
const char* to_string(ConnectionStatus s) noexcept;

struct StatusSnapshot {
  ConnectionStatus status = ConnectionStatus::disconnected;
  std::string endpoint;
  std::string session;
  std::uint64_t readings = 0;
  std::uint64_t malformed = 0;
  std::uint64_t half_cycles = 0;
  Settings settings;
};

enum class WindowView { instantaneous, rms_half };
WindowView parse_window_view(std::string_view text);

struct WindowResult {
  std::string session;
  WindowView view = WindowView::instantaneous;
  int cycles = 0;
  std::size_t start_index = 0;
  std::vector<double> points;
  dsp::WindowStats stats;
};

struct FftResult {
  std::string session;
  int cycles = 0;
  double bin_hz = 0.0;
  std::vector<dsp::DisplayBin> bins;
};

/// Latest-value broadcast channel; subscribers may miss intermediate
/// messages (coalescing) but always see the newest one.
class LiveHub {
 public:
  struct Message {
    std::uint64_t seq = 0;
    std::string body;
  };

  void publish(std::string body);
  std::uint64_t latest_seq() const;
  /// Waits for a message newer than `after`; nullopt on timeout.
  std::optional<Message> wait_next(std::uint64_t after, std::chrono::milliseconds timeout) const;

 private:
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  Message latest_;
};

/// Owns acquisition and analysis for one data directory. Control calls are
/// serialized; analysis calls read committed storage and may run
/// concurrently with ingest.
class Daemon {
 public:
  Daemon(Settings settings, std::filesystem::path data_dir);
  ~Daemon();

  Daemon(const Daemon&) = delete;
  Daemon& operator=(const Daemon&) = delete;

  /// Throws Error(conflict) unless disconnected and Error(connection) when
  /// the endpoint cannot be opened (state returns to disconnected).
  StatusSnapshot connect(const PortConfig& port);
  StatusSnapshot disconnect();
  StatusSnapshot status() const;

  /// Empty `cycles` selects every whole cycle of the latest session.
  WindowResult window(std::optional<int> cycles, WindowView view) const;
  FftResult fft(std::optional<int> cycles) const;
  /// Converts the latest session to RMS half-cycles, persists dataRMS.bin,
  /// classifies events and writes Report.txt.
  PqReport report() const;

  LiveHub& live() { return live_; }
  const Settings& settings() const { return settings_; }
  const std::filesystem::path& data_dir() const { return data_dir_; }

 private:
  void ingest(std::unique_ptr<AcquisitionSession> session);
  void join_finished_worker();
  std::string status_json_locked() const;

  Settings settings_;
  std::filesystem::path data_dir_;
  LiveHub live_;

  std::mutex control_mutex_;  // serializes connect/disconnect
  mutable std::mutex state_mutex_;
  ConnectionStatus state_ = ConnectionStatus::disconnected;
  std::string endpoint_;
  std::string session_id_;
  std::uint64_t readings_ = 0;
  std::uint64_t malformed_ = 0;
  std::uint64_t half_cycles_ = 0;
  AcquisitionSession* active_ = nullptr;  // owned by the worker; guarded by state_mutex_
  std::thread worker_;
};

/// HTTP + WebSocket front end for a Daemon.
class HttpServer {
 public:
  /// Binds immediately; port 0 picks an ephemeral port. Serves static files
  /// from `static_dir` at "/" when given.
  HttpServer(Daemon& daemon, const std::string& host, std::uint16_t port,
             std::optional<std::filesystem::path> static_dir = {});
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  std::uint16_t port() const { return port_; }
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint16_t port_ = 0;
};

/// Value of the Sec-WebSocket-Accept header for a client key.
std::string websocket_accept_key(const std::string& client_key);
/// Single unmasked server-to-client frame.
std::string websocket_frame(std::string_view payload, std::uint8_t opcode = 0x1);

}  // namespace pq::service

#endif
