// HTTP/JSON and WebSocket front end for the daemon.

#include <openssl/evp.h>

#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "pq/error.hpp"
#include "pq/service.hpp"

namespace pq::service {

using json = nlohmann::json;

std::string websocket_accept_key(const std::string& client_key) {
  static constexpr const char* kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  const std::string input = client_key + kGuid;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(input.data(), input.size(), digest, &len, EVP_sha1(), nullptr);
  return httplib::detail::base64_encode(std::string(reinterpret_cast<char*>(digest), len));
}

std::string websocket_frame(std::string_view payload, std::uint8_t opcode) {
  std::string frame;
  frame.push_back(static_cast<char>(0x80 | (opcode & 0x0f)));
  const auto n = payload.size();
  if (n < 126) {
    frame.push_back(static_cast<char>(n));
  } else if (n <= 0xffff) {
    frame.push_back(126);
    frame.push_back(static_cast<char>((n >> 8) & 0xff));
    frame.push_back(static_cast<char>(n & 0xff));
  } else {
    frame.push_back(127);
    for (int shift = 56; shift >= 0; shift -= 8)
      frame.push_back(static_cast<char>((static_cast<std::uint64_t>(n) >> shift) & 0xff));
  }
  frame.append(payload);
  return frame;
}

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::domain:
    case ErrorCode::connection: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::insufficient_data:
    case ErrorCode::degenerate_signal: return 422;
    case ErrorCode::io: return 500;
  }
  return 500;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, {{"error", to_string(code)}, {"message", message}}, http_status(code));
}

template <class F>
httplib::Server::Handler guarded(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, ErrorCode::invalid_argument, std::string("bad JSON: ") + e.what());
    } catch (const std::exception& e) {
      send_json(res, {{"error", "internal"}, {"message", e.what()}}, 500);
    }
  };
}

std::optional<int> parse_cycles(const httplib::Request& req) {
  if (!req.has_param("cycles")) return 6;
  const auto text = req.get_param_value("cycles");
  if (text == "all") return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value < 1)
    throw Error(ErrorCode::invalid_argument, "cycles must be a positive integer or 'all'");
  return value;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

json status_json(const StatusSnapshot& s) {
  const auto& c = s.settings.conversion;
  const auto& t = s.settings.thresholds;
  return {{"status", to_string(s.status)},
          {"endpoint", s.endpoint},
          {"session", s.session},
          {"readings", s.readings},
          {"malformed", s.malformed},
          {"half_cycles", s.half_cycles},
          {"config",
           {{"vref_volts", c.vref},
            {"offset_volts", c.offset},
            {"divider_ratio", c.ratio},
            {"nominal_voltage", c.nominal_voltage},
            {"sag_pu", t.sag_pu},
            {"surge_pu", t.surge_pu},
            {"interruption_pu", t.interruption_pu}}}};
}

json stats_json(const dsp::WindowStats& st) {
  json thd = st.thd ? json(*st.thd) : json(nullptr);
  return {{"vrms", st.vrms},
          {"vpeak", st.vpeak},
          {"thd", thd},
          {"nominal_frequency", kNominalFrequency},
          {"frequency_referential", true}};
}

// Preformatted strings so every client renders identical text.
json display_json(const dsp::WindowStats& st) {
  return {{"vrms", fixed(st.vrms, 2) + " V"},
          {"vpeak", fixed(st.vpeak, 2) + " V"},
          {"thd", st.thd ? fixed(*st.thd * 100.0, 2) + " %" : std::string("n/a")},
          {"frequency", "60 Hz (referential)"}};
}

json report_json(const PqReport& r) {
  json events = json::array();
  for (const auto& e : r.events)
    events.push_back({{"kind", to_string(e.kind)},
                      {"start_half_cycle", e.start_half_cycle},
                      {"duration_half_cycles", e.duration_half_cycles},
                      {"extreme_pu", e.extreme_pu},
                      {"extreme_volts", e.extreme_pu * r.nominal_voltage}});
  return {{"session", r.session_timestamp},
          {"half_cycles_analyzed", r.half_cycles_analyzed},
          {"nominal_voltage", r.nominal_voltage},
          {"thresholds",
           {{"sag_pu", r.thresholds.sag_pu},
            {"surge_pu", r.thresholds.surge_pu},
            {"interruption_pu", r.thresholds.interruption_pu}}},
          {"counts", {{"sag", r.sags}, {"surge", r.surges}, {"interruption", r.interruptions}}},
          {"min_rms_volts", r.min_rms_volts},
          {"max_rms_volts", r.max_rms_volts},
          {"min_pu", r.min_pu()},
          {"max_pu", r.max_pu()},
          {"summary", r.summary()},
          {"events", events}};
}

}  // namespace

struct HttpServer::Impl {
  httplib::Server server;
  std::thread thread;
  std::atomic<bool> stopping{false};
};

HttpServer::HttpServer(Daemon& daemon, const std::string& host, std::uint16_t port,
                       std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>()) {
  auto& srv = impl_->server;
  auto* stopping = &impl_->stopping;

  srv.Get("/api/status", guarded([&daemon](const auto&, auto& res) {
            send_json(res, status_json(daemon.status()));
          }));

  srv.Post("/api/connect", guarded([&daemon](const httplib::Request& req, httplib::Response& res) {
             PortConfig port;
             const json body = req.body.empty() ? json::object() : json::parse(req.body);
             if (body.contains("endpoint")) {
               port.endpoint = body.at("endpoint").get<std::string>();
             } else if (const char* env = std::getenv("PQ_ENDPOINT")) {
               port.endpoint = env;
             } else {
               throw Error(ErrorCode::invalid_argument, "endpoint is required");
             }
             if (body.contains("baud")) port.baud = body.at("baud").get<int>();
             send_json(res, status_json(daemon.connect(port)));
           }));

  srv.Post("/api/disconnect", guarded([&daemon](const auto&, auto& res) {
             send_json(res, status_json(daemon.disconnect()));
           }));

  srv.Get("/api/window", guarded([&daemon](const httplib::Request& req, httplib::Response& res) {
            const auto view = parse_window_view(req.get_param_value("view"));
            const auto w = daemon.window(parse_cycles(req), view);
            send_json(res, {{"session", w.session},
                            {"view", view == WindowView::instantaneous ? "inst" : "rms"},
                            {"cycles", w.cycles},
                            {"start_index", w.start_index},
                            {"sample_rate", kSampleRate},
                            {"points", w.points},
                            {"stats", stats_json(w.stats)},
                            {"display", display_json(w.stats)}});
          }));

  srv.Get("/api/fft", guarded([&daemon](const httplib::Request& req, httplib::Response& res) {
            const auto f = daemon.fft(parse_cycles(req));
            json bins = json::array();
            for (const auto& b : f.bins) bins.push_back({b.hz, b.magnitude});
            send_json(res, {{"session", f.session},
                            {"cycles", f.cycles},
                            {"bin_hz", f.bin_hz},
                            {"bins", bins}});
          }));

  srv.Post("/api/report", guarded([&daemon](const auto&, auto& res) {
             send_json(res, report_json(daemon.report()));
           }));

  srv.Get("/api/live", [&daemon, stopping](const httplib::Request& req, httplib::Response& res) {
    const auto key = req.get_header_value("Sec-WebSocket-Key");
    if (key.empty() || req.get_header_value("Upgrade") != "websocket") {
      send_error(res, ErrorCode::invalid_argument, "WebSocket upgrade required");
      return;
    }
    res.status = 101;
    res.set_header("Upgrade", "websocket");
    res.set_header("Connection", "Upgrade");
    res.set_header("Sec-WebSocket-Accept", websocket_accept_key(key));

    struct LiveState {
      std::uint64_t seen = 0;
      bool greeted = false;
      bool closing = false;
    };
    auto st = std::make_shared<LiveState>();
    st->seen = daemon.live().latest_seq();
    res.set_content_provider(
        "application/octet-stream",
        [&daemon, stopping, st](std::size_t, httplib::DataSink& sink) {
          auto send = [&](const std::string& text) {
            const auto frame = websocket_frame(text);
            return sink.write(frame.data(), frame.size());
          };
          auto finish = [&](const std::string& text) {
            send(text);
            const auto close = websocket_frame("", 0x8);
            sink.write(close.data(), close.size());
            sink.done();
            return true;
          };
          const auto snap = daemon.status();
          if (!st->greeted) {
            st->greeted = true;
            const auto hello = json{{"type", "status"},
                                    {"status", to_string(snap.status)},
                                    {"session", snap.session},
                                    {"readings", snap.readings},
                                    {"malformed", snap.malformed}}
                                   .dump();
            if (snap.status != ConnectionStatus::streaming)
              return finish(json{{"type", "end"}, {"status", to_string(snap.status)}}.dump());
            return send(hello);
          }
          if (*stopping) return finish(json{{"type", "end"}, {"status", "shutdown"}}.dump());
          auto msg = daemon.live().wait_next(st->seen, std::chrono::milliseconds(500));
          if (!msg) {
            if (snap.status != ConnectionStatus::streaming)
              return finish(json{{"type", "end"}, {"status", to_string(snap.status)}}.dump());
            return send(json{{"type", "status"},
                             {"status", to_string(snap.status)},
                             {"session", snap.session},
                             {"readings", snap.readings},
                             {"malformed", snap.malformed}}
                            .dump());
          }
          st->seen = msg->seq;
          if (msg->body.find("\"type\":\"end\"") != std::string::npos) return finish(msg->body);
          return send(msg->body);
        });
  });

  if (static_dir) srv.set_mount_point("/", static_dir->string());

  if (port == 0) {
    const int bound = srv.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::connection, "cannot listen on " + host);
    port_ = static_cast<std::uint16_t>(bound);
  } else {
    if (!srv.bind_to_port(host, port))
      throw Error(ErrorCode::connection, "cannot listen on " + host + ":" + std::to_string(port));
    port_ = port;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::stop() {
  if (!impl_ || impl_->stopping.exchange(true)) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace pq::service
