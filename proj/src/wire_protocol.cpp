#include "pq/wire_protocol.hpp"

#include <poll.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdio>

#include "posix_io.hpp"
#include "pq/error.hpp"

namespace pq {

using namespace std::chrono;

std::string format_timestamp(Timestamp t) {
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
  // YYYY-MM-DDTHH:MM:SSZ
  if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' ||
      s[16] != ':' || s[19] != 'Z')
    return std::nullopt;
  auto field = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (s[i] < '0' || s[i] > '9') return std::nullopt;
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  const auto y = field(0, 4), mo = field(5, 2), d = field(8, 2), h = field(11, 2),
             mi = field(14, 2), se = field(17, 2);
  if (!y || !mo || !d || !h || !mi || !se) return std::nullopt;
  const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)},
                           day{static_cast<unsigned>(*d)}};
  if (!ymd.ok() || *h > 23 || *mi > 59 || *se > 59) return std::nullopt;
  return sys_days{ymd} + hours{*h} + minutes{*mi} + seconds{*se};
}

Timestamp now_utc() { return floor<seconds>(system_clock::now()); }

std::string encode_reading(AdcReading reading) {
  std::string out = std::to_string(reading.count());
  out += "\r\n";
  return out;
}

std::string encode_session_header(Timestamp t) { return "#" + format_timestamp(t) + "\r\n"; }

void StreamDecoder::feed(std::string_view bytes, std::vector<StreamEvent>& out) {
  while (!bytes.empty()) {
    const auto nl = bytes.find('\n');
    const auto chunk = bytes.substr(0, nl);
    if (overlong_) {
      // Swallow the remainder of a line already reported as Malformed.
      if (nl == std::string_view::npos) return;
      overlong_ = false;
    } else if (nl == std::string_view::npos) {
      partial_.append(chunk);
      if (partial_.size() > kMaxLine) {
        ++malformed_;
        out.emplace_back(Malformed{partial_.substr(0, kMaxLine)});
        partial_.clear();
        overlong_ = true;
      }
      return;
    } else if (partial_.empty()) {
      finish_line(chunk, out);
    } else {
      partial_.append(chunk);
      finish_line(partial_, out);
      partial_.clear();
    }
    bytes.remove_prefix(nl + 1);
  }
}

void StreamDecoder::finish_line(std::string_view line, std::vector<StreamEvent>& out) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.size() > kMaxLine) {
    // Same truncation as the partial-line path so chunking cannot matter.
    ++malformed_;
    out.emplace_back(Malformed{std::string(line.substr(0, kMaxLine))});
    return;
  }

  if (!line.empty() && line.size() <= 4 &&
      line.find_first_not_of("0123456789") == std::string_view::npos) {
    int value = 0;
    std::from_chars(line.data(), line.data() + line.size(), value);
    if (value <= kAdcMax) {
      ++readings_;
      out.emplace_back(AdcReading(value));
      return;
    }
  } else if (!line.empty() && line.front() == '#') {
    if (auto ts = parse_timestamp(line.substr(1))) {
      out.emplace_back(SessionStart{*ts});
      return;
    }
  }
  ++malformed_;
  out.emplace_back(Malformed{std::string(line)});
}

std::vector<StreamEvent> decode_stream(std::string_view bytes) {
  StreamDecoder decoder;
  std::vector<StreamEvent> out;
  decoder.feed(bytes, out);
  return out;
}

std::string Endpoint::to_string() const {
  if (kind == Kind::serial) return "serial:" + device;
  const bool v6 = host.find(':') != std::string::npos;
  return "tcp:" + (v6 ? "[" + host + "]" : host) + ":" + std::to_string(port);
}

Endpoint parse_endpoint(std::string_view text) {
  Endpoint ep;
  if (text.starts_with("serial:")) {
    ep.kind = Endpoint::Kind::serial;
    ep.device = std::string(text.substr(7));
    if (ep.device.empty())
      throw Error(ErrorCode::invalid_argument, "serial endpoint needs a device path");
    return ep;
  }
  if (!text.starts_with("tcp:"))
    throw Error(ErrorCode::invalid_argument,
                "endpoint must be serial:<device> or tcp:<host>:<port>, got '" +
                    std::string(text) + "'");
  auto rest = text.substr(4);
  const auto colon = rest.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
    throw Error(ErrorCode::invalid_argument, "tcp endpoint needs host and port");
  auto host = rest.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']')
    host = host.substr(1, host.size() - 2);
  const auto port_text = rest.substr(colon + 1);
  unsigned port = 0;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port > 65535 ||
      port_text.empty())
    throw Error(ErrorCode::invalid_argument, "invalid tcp port '" + std::string(port_text) + "'");
  ep.kind = Endpoint::Kind::tcp;
  ep.host = std::string(host);
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

struct AcquisitionSession::Impl {
  detail::Fd fd;
  detail::WakePipe wake;
  StreamDecoder decoder;
};

AcquisitionSession::AcquisitionSession(std::unique_ptr<Impl> impl, Timestamp started)
    : impl_(std::move(impl)), started_(started) {}

AcquisitionSession::~AcquisitionSession() = default;

std::unique_ptr<AcquisitionSession> AcquisitionSession::open(const PortConfig& cfg) {
  if (cfg.baud <= 0) throw Error(ErrorCode::invalid_argument, "baud must be positive");
  Endpoint ep;
  try {
    ep = parse_endpoint(cfg.endpoint);
  } catch (const Error& e) {
    throw Error(ErrorCode::connection, e.what());
  }
  auto impl = std::make_unique<Impl>();
  if (ep.kind == Endpoint::Kind::tcp) {
    impl->fd = detail::connect_tcp(ep.host, ep.port, milliseconds(3000));
  } else {
    try {
      impl->fd = detail::open_serial(ep.device, cfg.baud);
    } catch (const Error& e) {
      throw Error(ErrorCode::connection, e.what());
    }
  }
  return std::unique_ptr<AcquisitionSession>(new AcquisitionSession(std::move(impl), now_utc()));
}

bool AcquisitionSession::read(std::vector<StreamEvent>& out, milliseconds timeout) {
  if (ended_) return false;
  if (!announced_) {
    announced_ = true;
    out.emplace_back(SessionStart{started_});
    return true;
  }
  auto finish = [&] {
    impl_->decoder.discard_partial();
    ended_ = true;
    return false;
  };
  if (stop_requested_) return finish();

  pollfd fds[2] = {{impl_->fd.get(), POLLIN, 0}, {impl_->wake.read_fd(), POLLIN, 0}};
  const int rc = ::poll(fds, 2, static_cast<int>(timeout.count()));
  if (rc < 0) return errno == EINTR ? true : finish();
  if (stop_requested_ || (fds[1].revents & POLLIN)) return finish();
  if (rc == 0) return true;

  char buf[16384];
  const ssize_t n = ::read(impl_->fd.get(), buf, sizeof buf);
  if (n < 0) {
    if (errno == EAGAIN || errno == EINTR) return true;
    return finish();
  }
  if (n == 0) return finish();

  bytes_ += static_cast<std::uint64_t>(n);
  impl_->decoder.feed(std::string_view(buf, static_cast<std::size_t>(n)), out);
  readings_ = impl_->decoder.readings();
  malformed_ = impl_->decoder.malformed();
  return true;
}

void AcquisitionSession::stop() {
  stop_requested_ = true;
  impl_->wake.notify();
}

SessionStats AcquisitionSession::stats() const {
  return {readings_.load(), malformed_.load(), bytes_.load()};
}

}  // namespace pq
