#ifndef PQ_WIRE_PROTOCOL_HPP
#define PQ_WIRE_PROTOCOL_HPP

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pq/core_types.hpp"

namespace pq {

using Timestamp = std::chrono::sys_seconds;

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(Timestamp t);
std::optional<Timestamp> parse_timestamp(std::string_view text);
Timestamp now_utc();

struct SessionStart {
  Timestamp timestamp;
  friend bool operator==(const SessionStart&, const SessionStart&) = default;
};

struct Malformed {
  std::string raw;
  friend bool operator==(const Malformed&, const Malformed&) = default;
};

using StreamEvent = std::variant<SessionStart, AdcReading, Malformed>;

/// Decimal count followed by CR LF, as the firmware's println emits it.
std::string encode_reading(AdcReading reading);
/// "#" + ISO-8601 UTC timestamp + CR LF.
std::string encode_session_header(Timestamp t);

/// Incremental line decoder. Never fails: anything that is neither a reading
/// in 0..1023 nor a session header becomes Malformed. A partial trailing line
/// is held until the rest of it arrives.
class StreamDecoder {
 public:
  // Longer lines are reported once as Malformed, truncated to kMaxLine bytes,
  // without waiting for their end.
  static constexpr std::size_t kMaxLine = 64;

  void feed(std::string_view bytes, std::vector<StreamEvent>& out);
  /// Drops any buffered partial line.
  void discard_partial() { partial_.clear(); overlong_ = false; }
  std::size_t pending_bytes() const { return partial_.size(); }

  std::uint64_t readings() const { return readings_; }
  std::uint64_t malformed() const { return malformed_; }

 private:
  void finish_line(std::string_view line, std::vector<StreamEvent>& out);

  std::string partial_;
  bool overlong_ = false;
  std::uint64_t readings_ = 0;
  std::uint64_t malformed_ = 0;
};

/// Decodes complete lines of `bytes`; an unterminated tail is ignored.
std::vector<StreamEvent> decode_stream(std::string_view bytes);

struct Endpoint {
  enum class Kind { serial, tcp };
  Kind kind = Kind::tcp;
  std::string device;  // serial
  std::string host;    // tcp
  std::uint16_t port = 0;

  std::string to_string() const;
};

/// Accepts "serial:<device>" and "tcp:<host>:<port>" (IPv6 hosts in brackets).
Endpoint parse_endpoint(std::string_view text);

inline constexpr int kDefaultBaud = 2000000;

struct PortConfig {
  std::string endpoint;
  int baud = kDefaultBaud;
};

struct SessionStats {
  std::uint64_t readings = 0;
  std::uint64_t malformed = 0;
  std::uint64_t bytes = 0;
};

/// Live byte stream from a device or simulator, decoded into StreamEvents.
/// The first event is always SessionStart(now). One thread reads; stop() may
/// be called from any thread.
class AcquisitionSession {
 public:
  /// Throws Error(connection) if the endpoint cannot be opened.
  static std::unique_ptr<AcquisitionSession> open(const PortConfig& cfg);
  ~AcquisitionSession();

  AcquisitionSession(const AcquisitionSession&) = delete;
  AcquisitionSession& operator=(const AcquisitionSession&) = delete;

  /// Appends whatever arrives within `timeout`. Returns false once the
  /// stream has ended (stop() or the peer closed); the partial trailing line
  /// is discarded at that point.
  bool read(std::vector<StreamEvent>& out, std::chrono::milliseconds timeout);
  void stop();
  bool ended() const { return ended_.load(); }

  SessionStats stats() const;
  Timestamp started_at() const { return started_; }

 private:
  struct Impl;
  explicit AcquisitionSession(std::unique_ptr<Impl> impl, Timestamp started);

  std::unique_ptr<Impl> impl_;
  Timestamp started_;
  bool announced_ = false;
  std::atomic<bool> stop_requested_{false};
  std::atomic<bool> ended_{false};
  std::atomic<std::uint64_t> readings_{0};
  std::atomic<std::uint64_t> malformed_{0};
  std::atomic<std::uint64_t> bytes_{0};
};

}  // namespace pq

#endif
