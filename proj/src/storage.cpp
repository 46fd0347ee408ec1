#include "pq/storage.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "posix_io.hpp"
#include "pq/dsp.hpp"
#include "pq/error.hpp"

namespace pq::storage {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::not_found, "no data file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

struct Block {
  std::string timestamp;
  std::string_view body;  // everything after the header line
};

// Splits a session file into header-delimited blocks. The views point into
// `text`.
std::vector<Block> split_blocks(std::string_view text, const fs::path& path) {
  std::vector<Block> blocks;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == '\n') {
      ++pos;
      continue;
    }
    if (text[pos] != '#')
      throw Error(ErrorCode::io, "corrupt session file " + path.string() +
                                     ": data before session header at byte " + std::to_string(pos));
    const auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) break;  // header still being written
    Block b;
    b.timestamp = std::string(text.substr(pos + 1, eol - pos - 1));
    const auto next = text.find("\n#", eol);
    const auto end = next == std::string_view::npos ? text.size() : next;
    b.body = text.substr(eol + 1, end - eol - 1);
    blocks.push_back(std::move(b));
    pos = end;
  }
  return blocks;
}

// Comma-terminated tokens; an unterminated tail is an in-flight write and is
// not part of the snapshot.
template <class F>
void for_each_token(std::string_view body, F&& f) {
  std::size_t pos = 0;
  while (true) {
    const auto comma = body.find(',', pos);
    if (comma == std::string_view::npos) return;
    f(body.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

std::uint64_t count_tokens(std::string_view body) {
  std::uint64_t n = 0;
  for (char c : body) n += c == ',';
  return n;
}

AdcReading parse_count(std::string_view token, const fs::path& path) {
  int value = -1;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty() || value < 0 ||
      value > kAdcMax)
    throw Error(ErrorCode::io, "corrupt value '" + std::string(token) + "' in " + path.string());
  return AdcReading(value);
}

std::size_t resolve(SessionSelector session, std::size_t available, const fs::path& path) {
  if (available == 0) throw Error(ErrorCode::not_found, "no sessions stored in " + path.string());
  if (!session) return available - 1;
  if (*session >= available)
    throw Error(ErrorCode::not_found, "session " + std::to_string(*session) + " not found (" +
                                          std::to_string(available) + " stored)");
  return *session;
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

RawWriter::RawWriter(const fs::path& path) : path_(path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(ErrorCode::io, detail::errno_message("cannot open " + path.string()));
  struct stat st {};
  if (::fstat(fd_, &st) == 0 && st.st_size > 0) {
    int rd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (rd >= 0) {
      if (::pread(rd, &last_byte_, 1, st.st_size - 1) != 1) last_byte_ = '\n';
      ::close(rd);
    }
  }
}

RawWriter::~RawWriter() {
  try {
    flush();
  } catch (...) {
  }
  if (fd_ >= 0) ::close(fd_);
}

void RawWriter::begin_session(Timestamp t) {
  flush();
  if (last_byte_ != '\n') buffer_ += '\n';
  buffer_ += '#';
  buffer_ += format_timestamp(t);
  buffer_ += '\n';
  flush();
  in_session_ = true;
  session_values_ = 0;
}

void RawWriter::append(AdcReading reading) {
  if (!in_session_) throw Error(ErrorCode::invalid_argument, "append outside of a session");
  char buf[8];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, reading.count());
  buffer_.append(buf, ptr);
  buffer_ += ',';
  ++session_values_;
  if (buffer_.size() >= 64 * 1024) flush();
}

void RawWriter::append_raw(std::span<const StreamEvent> events) {
  for (const auto& ev : events) {
    if (const auto* start = std::get_if<SessionStart>(&ev)) {
      begin_session(start->timestamp);
    } else if (const auto* reading = std::get_if<AdcReading>(&ev)) {
      if (!in_session_) begin_session(now_utc());
      append(*reading);
    } else {
      ++malformed_skipped_;
    }
  }
  flush();
}

void RawWriter::flush() {
  if (buffer_.empty()) return;
  struct stat st {};
  const off_t before = ::fstat(fd_, &st) == 0 ? st.st_size : -1;
  std::string_view data = buffer_;
  while (!data.empty()) {
    const ssize_t n = ::write(fd_, data.data(), data.size());
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      // Roll back a short write so no value is left without its comma.
      if (before >= 0 && ::ftruncate(fd_, before) != 0) {
      }
      const auto msg = detail::errno_message("write to " + path_.string());
      buffer_.clear();
      throw Error(ErrorCode::io, msg);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  last_byte_ = buffer_.back();
  buffer_.clear();
}

std::vector<SessionInfo> list_sessions(const fs::path& raw_file) {
  if (!fs::exists(raw_file)) return {};
  const auto text = read_file(raw_file);
  const auto blocks = split_blocks(text, raw_file);
  std::vector<SessionInfo> out;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    out.push_back({i, blocks[i].timestamp, count_tokens(blocks[i].body)});
  return out;
}

RawSession read_session(const fs::path& raw_file, SessionSelector session) {
  const auto text = read_file(raw_file);
  const auto blocks = split_blocks(text, raw_file);
  const std::size_t idx = resolve(session, blocks.size(), raw_file);
  RawSession out;
  out.info = {idx, blocks[idx].timestamp, 0};
  out.readings.reserve(count_tokens(blocks[idx].body));
  for_each_token(blocks[idx].body,
                 [&](std::string_view tok) { out.readings.push_back(parse_count(tok, raw_file)); });
  out.info.value_count = out.readings.size();
  return out;
}

SampleWindow read_raw_window(const fs::path& raw_file, SessionSelector session,
                             std::optional<int> last_n_cycles, const ConversionConfig& cfg,
                             SessionInfo* info) {
  if (last_n_cycles && *last_n_cycles < 1)
    throw Error(ErrorCode::invalid_argument, "cycle count must be at least 1");
  const auto raw = read_session(raw_file, session);
  if (info) *info = raw.info;
  const std::size_t available = raw.readings.size() / kSamplesPerCycle;
  const std::size_t want = last_n_cycles ? static_cast<std::size_t>(*last_n_cycles) : available;
  if (available == 0 || want > available)
    throw Error(ErrorCode::insufficient_data,
                "requested " + std::to_string(want) + " cycles but session holds " +
                    std::to_string(available) + " whole cycles");
  const std::size_t n = want * kSamplesPerCycle;
  const std::size_t first = raw.readings.size() - n;
  std::vector<double> volts;
  volts.reserve(n);
  for (std::size_t i = first; i < raw.readings.size(); ++i)
    volts.push_back(adc_to_voltage(raw.readings[i], cfg));
  return SampleWindow(std::move(volts), static_cast<int>(want), first);
}

void write_rms(const fs::path& rms_file, const RmsHalfSeries& series) {
  std::string existing;
  if (fs::exists(rms_file)) existing = read_file(rms_file);
  const auto blocks = split_blocks(existing, rms_file);

  std::string body;
  body.reserve(series.values.size() * 8);
  for (double v : series.values) {
    body += format_fixed(v, 3);
    body += ',';
  }

  std::string out;
  bool replaced = false;
  auto emit = [&](const std::string& ts, std::string_view b) {
    if (!out.empty()) out += '\n';
    out += '#';
    out += ts;
    out += '\n';
    out += b;
  };
  for (const auto& b : blocks) {
    if (b.timestamp == series.session_id) {
      emit(b.timestamp, body);
      replaced = true;
    } else {
      emit(b.timestamp, b.body);
    }
  }
  if (!replaced) emit(series.session_id, body);

  if (rms_file.has_parent_path()) fs::create_directories(rms_file.parent_path());
  const auto tmp = fs::path(rms_file.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::io, "cannot write " + tmp.string());
    f << out;
    if (!f.flush()) throw Error(ErrorCode::io, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, rms_file, ec);
  if (ec) throw Error(ErrorCode::io, "cannot replace " + rms_file.string() + ": " + ec.message());
}

RmsHalfSeries read_rms(const fs::path& rms_file, const std::optional<std::string>& session_id) {
  const auto text = read_file(rms_file);
  const auto blocks = split_blocks(text, rms_file);
  if (blocks.empty()) throw Error(ErrorCode::not_found, "no RMS sessions in " + rms_file.string());
  const Block* chosen = &blocks.back();
  if (session_id) {
    chosen = nullptr;
    for (const auto& b : blocks)
      if (b.timestamp == *session_id) chosen = &b;
    if (!chosen) throw Error(ErrorCode::not_found, "no RMS block for session " + *session_id);
  }
  RmsHalfSeries series;
  series.session_id = chosen->timestamp;
  for_each_token(chosen->body, [&](std::string_view tok) {
    series.values.push_back(parse_double(tok, "RMS value"));
  });
  return series;
}

std::string format_report(const PqReport& r) {
  std::ostringstream o;
  const auto& t = r.thresholds;
  o << "Power quality report\n";
  o << "session: " << r.session_timestamp << '\n';
  o << "half_cycles_analyzed: " << r.half_cycles_analyzed << '\n';
  o << "nominal_voltage: " << format_fixed(r.nominal_voltage, 3) << " V\n";
  o << "thresholds: sag < " << format_fixed(t.sag_pu, 3) << " pu, surge > "
    << format_fixed(t.surge_pu, 3) << " pu, interruption < " << format_fixed(t.interruption_pu, 3)
    << " pu\n";
  o << "\n[stats]\n";
  o << "sags: " << r.sags << '\n';
  o << "surges: " << r.surges << '\n';
  o << "interruptions: " << r.interruptions << '\n';
  o << "min_rms_half: " << format_fixed(r.min_rms_volts, 3) << " V (" << format_fixed(r.min_pu(), 3)
    << " pu)\n";
  o << "max_rms_half: " << format_fixed(r.max_rms_volts, 3) << " V (" << format_fixed(r.max_pu(), 3)
    << " pu)\n";
  o << "summary: " << r.summary() << '\n';
  o << "\n[events]\n";
  for (const auto& e : r.events) {
    o << to_string(e.kind) << " start_half_cycle=" << e.start_half_cycle
      << " duration_half_cycles=" << e.duration_half_cycles
      << " extreme=" << format_fixed(e.extreme_pu, 3) << " pu ("
      << format_fixed(e.extreme_pu * r.nominal_voltage, 3) << " V)\n";
  }
  return o.str();
}

void write_report_file(const fs::path& path, const PqReport& report) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::io, "cannot write " + path.string());
  f << format_report(report);
  if (!f.flush()) throw Error(ErrorCode::io, "cannot write " + path.string());
}

namespace {

std::string_view value_after(std::string_view line, std::string_view key) {
  if (!line.starts_with(key)) return {};
  return line.substr(key.size());
}

// Reads the leading number of "<number> <unit> ..." text.
double leading_number(std::string_view s) {
  return parse_double(s.substr(0, s.find(' ')), "report field");
}

std::size_t parse_size(std::string_view s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw Error(ErrorCode::io, "malformed report integer '" + std::string(s) + "'");
  return v;
}

}  // namespace

PqReport parse_report(const std::string& text) {
  PqReport r;
  std::istringstream in(text);
  std::string line;
  bool in_events = false;
  bool header_seen = false;
  while (std::getline(in, line)) {
    std::string_view l = line;
    if (l == "Power quality report") {
      header_seen = true;
      continue;
    }
    if (l.empty() || l == "[stats]") continue;
    if (l == "[events]") {
      in_events = true;
      continue;
    }
    if (in_events) {
      // <kind> start_half_cycle=N duration_half_cycles=N extreme=X pu (V V)
      std::istringstream ls(line);
      std::string kind, start, dur, extreme;
      ls >> kind >> start >> dur >> extreme;
      PqEvent e;
      e.kind = event_kind_from_string(kind);
      e.start_half_cycle = parse_size(value_after(start, "start_half_cycle="));
      e.duration_half_cycles = parse_size(value_after(dur, "duration_half_cycles="));
      e.extreme_pu = parse_double(value_after(extreme, "extreme="), "extreme");
      r.events.push_back(e);
      continue;
    }
    if (auto v = value_after(l, "session: "); !v.empty()) r.session_timestamp = std::string(v);
    else if (auto v = value_after(l, "half_cycles_analyzed: "); !v.empty()) r.half_cycles_analyzed = parse_size(v);
    else if (auto v = value_after(l, "nominal_voltage: "); !v.empty()) r.nominal_voltage = leading_number(v);
    else if (auto v = value_after(l, "thresholds: sag < "); !v.empty()) {
      r.thresholds.sag_pu = leading_number(v);
      const auto s = v.find("surge > ");
      const auto i = v.find("interruption < ");
      if (s == std::string_view::npos || i == std::string_view::npos)
        throw Error(ErrorCode::io, "malformed thresholds line");
      r.thresholds.surge_pu = leading_number(v.substr(s + 8));
      r.thresholds.interruption_pu = leading_number(v.substr(i + 15));
    }
    else if (auto v = value_after(l, "sags: "); !v.empty()) r.sags = parse_size(v);
    else if (auto v = value_after(l, "surges: "); !v.empty()) r.surges = parse_size(v);
    else if (auto v = value_after(l, "interruptions: "); !v.empty()) r.interruptions = parse_size(v);
    else if (auto v = value_after(l, "min_rms_half: "); !v.empty()) r.min_rms_volts = leading_number(v);
    else if (auto v = value_after(l, "max_rms_half: "); !v.empty()) r.max_rms_volts = leading_number(v);
    else if (l.starts_with("summary: ")) continue;
    else throw Error(ErrorCode::io, "unrecognized report line '" + line + "'");
  }
  if (!header_seen) throw Error(ErrorCode::io, "not a power quality report");
  return r;
}

PqReport read_report_file(const fs::path& path) { return parse_report(read_file(path)); }

}  // namespace pq::storage
