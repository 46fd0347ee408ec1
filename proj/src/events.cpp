#include "pq/events.hpp"

#include <algorithm>
#include <optional>

#include "pq/dsp.hpp"
#include "pq/error.hpp"

namespace pq {

const char* to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::sag: return "sag";
    case EventKind::surge: return "surge";
    case EventKind::interruption: return "interruption";
  }
  return "unknown";
}

EventKind event_kind_from_string(std::string_view text) {
  if (text == "sag") return EventKind::sag;
  if (text == "surge") return EventKind::surge;
  if (text == "interruption") return EventKind::interruption;
  throw Error(ErrorCode::invalid_argument, "unknown event kind '" + std::string(text) + "'");
}

namespace {

std::string join(const std::vector<std::string>& parts, const char* last_sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += (i + 1 == parts.size()) ? last_sep : ", ";
    out += parts[i];
  }
  return out;
}

}  // namespace

std::string PqReport::summary() const {
  const std::pair<EventKind, std::size_t> counts[] = {
      {EventKind::sag, sags}, {EventKind::surge, surges}, {EventKind::interruption, interruptions}};
  std::vector<std::string> occurred, absent;
  for (auto [kind, n] : counts) {
    std::string name = to_string(kind);
    if (n == 0) {
      absent.push_back(name + "s");
    } else {
      occurred.push_back(std::to_string(n) + " voltage " + name + (n == 1 ? "" : "s"));
    }
  }
  std::string out;
  if (!occurred.empty()) out += join(occurred, " and ") + " took place.";
  if (!absent.empty()) {
    if (!out.empty()) out += ' ';
    out += "No voltage " + join(absent, " or ") + " occurred.";
  }
  return out;
}

RmsHalfSeries rms_half_series(std::span<const double> samples, std::string session_id) {
  if (samples.size() < kSamplesPerHalfCycle)
    throw Error(ErrorCode::insufficient_data,
                "need at least 30 samples for one half-cycle, have " +
                    std::to_string(samples.size()));
  RmsHalfSeries series;
  series.session_id = std::move(session_id);
  const std::size_t blocks = samples.size() / kSamplesPerHalfCycle;
  series.values.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b)
    series.values.push_back(dsp::rms(samples.subspan(b * kSamplesPerHalfCycle, kSamplesPerHalfCycle)));
  return series;
}

std::vector<PqEvent> classify_events(const RmsHalfSeries& series, const ConversionConfig& cfg,
                                     const Thresholds& thresholds) {
  if (series.values.empty())
    throw Error(ErrorCode::insufficient_data, "no RMS half-cycle values to classify");
  if (!(cfg.nominal_voltage > 0.0))
    throw Error(ErrorCode::domain, "nominal voltage must be positive");

  enum class Band { normal, under, over };
  auto band_of = [&](double pu) {
    if (pu < thresholds.sag_pu) return Band::under;
    if (pu > thresholds.surge_pu) return Band::over;
    return Band::normal;
  };

  std::vector<PqEvent> events;
  std::optional<PqEvent> open;
  Band open_band = Band::normal;

  auto close = [&] {
    if (!open) return;
    if (open_band == Band::under)
      open->kind = open->extreme_pu < thresholds.interruption_pu ? EventKind::interruption
                                                                  : EventKind::sag;
    events.push_back(*open);
    open.reset();
  };

  for (std::size_t i = 0; i < series.values.size(); ++i) {
    const double pu = series.values[i] / cfg.nominal_voltage;
    const Band band = band_of(pu);
    if (open && band != open_band) close();
    if (band == Band::normal) continue;
    if (!open) {
      open = PqEvent{band == Band::over ? EventKind::surge : EventKind::sag,
                     series.start_half_cycle + i, 0, pu};
      open_band = band;
    }
    ++open->duration_half_cycles;
    open->extreme_pu = band == Band::over ? std::max(open->extreme_pu, pu)
                                          : std::min(open->extreme_pu, pu);
  }
  close();
  return events;
}

PqReport build_report(const std::vector<PqEvent>& events, const RmsHalfSeries& series,
                      const ConversionConfig& cfg, const Thresholds& thresholds) {
  PqReport report;
  report.session_timestamp = series.session_id;
  report.half_cycles_analyzed = series.values.size();
  report.nominal_voltage = cfg.nominal_voltage;
  report.thresholds = thresholds;
  report.events = events;
  if (!series.values.empty()) {
    const auto [lo, hi] = std::minmax_element(series.values.begin(), series.values.end());
    report.min_rms_volts = *lo;
    report.max_rms_volts = *hi;
  }
  for (const auto& e : events) {
    switch (e.kind) {
      case EventKind::sag: ++report.sags; break;
      case EventKind::surge: ++report.surges; break;
      case EventKind::interruption: ++report.interruptions; break;
    }
  }
  return report;
}

}  // namespace pq
