#ifndef PQ_EVENTS_HPP
#define PQ_EVENTS_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pq/core_types.hpp"
#include "pq/settings.hpp"

namespace pq {

/// One RMS value per non-overlapping 30-sample block, indexed from session
/// start.
struct RmsHalfSeries {
  std::vector<double> values;
  std::size_t start_half_cycle = 0;
  std::string session_id;
};

enum class EventKind { sag, surge, interruption };

const char* to_string(EventKind kind) noexcept;
EventKind event_kind_from_string(std::string_view text);

struct PqEvent {
  EventKind kind = EventKind::sag;
  std::size_t start_half_cycle = 0;
  std::size_t duration_half_cycles = 1;
  double extreme_pu = 1.0;

  friend bool operator==(const PqEvent&, const PqEvent&) = default;
};

struct PqReport {
  std::string session_timestamp;
  std::size_t half_cycles_analyzed = 0;
  double nominal_voltage = 120.0;
  Thresholds thresholds;
  std::size_t sags = 0;
  std::size_t surges = 0;
  std::size_t interruptions = 0;
  double min_rms_volts = 0.0;
  double max_rms_volts = 0.0;
  std::vector<PqEvent> events;

  double min_pu() const { return min_rms_volts / nominal_voltage; }
  double max_pu() const { return max_rms_volts / nominal_voltage; }
  /// Plain-language line naming which disturbance kinds occurred.
  std::string summary() const;
};

/// Throws Error(insufficient_data) for fewer than 30 samples; a trailing
/// remainder shorter than a half-cycle is dropped.
RmsHalfSeries rms_half_series(std::span<const double> samples,
                              std::string session_id = {});

/// Maximal runs below sag_pu become one sag (or one interruption when the run
/// dips below interruption_pu); maximal runs above surge_pu become one surge.
std::vector<PqEvent> classify_events(const RmsHalfSeries& series,
                                     const ConversionConfig& cfg,
                                     const Thresholds& thresholds);

PqReport build_report(const std::vector<PqEvent>& events, const RmsHalfSeries& series,
                      const ConversionConfig& cfg, const Thresholds& thresholds);

}  // namespace pq

#endif
