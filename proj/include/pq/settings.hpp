#ifndef PQ_SETTINGS_HPP
#define PQ_SETTINGS_HPP

#include <filesystem>
#include <string>
#include <string_view>

#include "pq/core_types.hpp"

namespace pq {

/// Per-unit bands for RMS half-cycle classification.
struct Thresholds {
  double sag_pu = 0.9;
  double surge_pu = 1.1;
  double interruption_pu = 0.1;

  void validate() const;
};

struct Settings {
  ConversionConfig conversion;
  Thresholds thresholds;

  void validate() const;
};

// Recognized keys: vref_volts, offset_volts, divider_ratio, nominal_voltage,
// sag_pu, surge_pu, interruption_pu.
void apply_setting(Settings& settings, std::string_view key, std::string_view value);

/// Reads `key = value` lines; blank lines and `#` comments are ignored.
/// Unknown keys and unparsable values raise Error(invalid_argument) with the
/// offending line number.
void load_settings_file(Settings& settings, const std::filesystem::path& path);

double parse_double(std::string_view text, std::string_view what);

}  // namespace pq

#endif
