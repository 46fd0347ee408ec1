#ifndef PQ_STORAGE_HPP
#define PQ_STORAGE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pq/core_types.hpp"
#include "pq/events.hpp"
#include "pq/wire_protocol.hpp"

namespace pq::storage {

namespace fs = std::filesystem;

inline constexpr const char* kRawFile = "dataRaw.bin";
inline constexpr const char* kRmsFile = "dataRMS.bin";
inline constexpr const char* kReportFile = "Report.txt";

inline fs::path raw_path(const fs::path& dir) { return dir / kRawFile; }
inline fs::path rms_path(const fs::path& dir) { return dir / kRmsFile; }
inline fs::path report_path(const fs::path& dir) { return dir / kReportFile; }

/// Empty selects the most recent session.
using SessionSelector = std::optional<std::size_t>;

struct SessionInfo {
  std::size_t index = 0;
  std::string timestamp;
  std::uint64_t value_count = 0;
};

/// Append-only writer for dataRaw.bin. Layout: "#<timestamp>\n" per session
/// followed by "<count>," for every reading; a header always starts a new
/// line. Each value and its comma reach the file in the same write().
class RawWriter {
 public:
  explicit RawWriter(const fs::path& path);
  ~RawWriter();
  RawWriter(const RawWriter&) = delete;
  RawWriter& operator=(const RawWriter&) = delete;

  void begin_session(Timestamp t);
  void append(AdcReading reading);
  /// SessionStart opens a session, readings are appended, Malformed events
  /// are skipped and counted. Flushes before returning.
  void append_raw(std::span<const StreamEvent> events);
  void flush();

  bool in_session() const { return in_session_; }
  std::uint64_t session_values() const { return session_values_; }
  std::uint64_t malformed_skipped() const { return malformed_skipped_; }

 private:
  fs::path path_;
  int fd_ = -1;
  std::string buffer_;
  char last_byte_ = '\n';
  bool in_session_ = false;
  std::uint64_t session_values_ = 0;
  std::uint64_t malformed_skipped_ = 0;
};

/// Sessions committed so far (values up to the last comma).
std::vector<SessionInfo> list_sessions(const fs::path& raw_file);

struct RawSession {
  SessionInfo info;
  std::vector<AdcReading> readings;
};

/// Throws Error(not_found) if the file or session is missing.
RawSession read_session(const fs::path& raw_file, SessionSelector session = {});

/// Last `last_n_cycles` * 60 readings converted to volts; empty selects all
/// whole cycles. Throws Error(insufficient_data) naming the available cycles.
SampleWindow read_raw_window(const fs::path& raw_file, SessionSelector session,
                             std::optional<int> last_n_cycles, const ConversionConfig& cfg,
                             SessionInfo* info = nullptr);

/// Replaces (or appends) the block for series.session_id in dataRMS.bin.
/// Values carry three decimals.
void write_rms(const fs::path& rms_file, const RmsHalfSeries& series);
/// Looks a block up by session timestamp; empty selects the last block.
RmsHalfSeries read_rms(const fs::path& rms_file, const std::optional<std::string>& session_id = {});

std::string format_report(const PqReport& report);
void write_report_file(const fs::path& path, const PqReport& report);
/// Reader for the text produced by format_report.
PqReport parse_report(const std::string& text);
PqReport read_report_file(const fs::path& path);

}  // namespace pq::storage

#endif
