#include "pq/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pq/error.hpp"

namespace pq {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::domain: return "domain";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::degenerate_signal: return "degenerate_signal";
    case ErrorCode::io: return "io";
    case ErrorCode::connection: return "connection";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::not_found: return "not_found";
  }
  return "unknown";
}

void ConversionConfig::validate() const {
  if (!(vref > 0.0)) throw Error(ErrorCode::domain, "vref must be positive");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw Error(ErrorCode::domain, "divider ratio must lie in (0, 1)");
  if (!(offset > 0.0 && offset < vref))
    throw Error(ErrorCode::domain, "offset must lie in (0, vref)");
  if (!(nominal_voltage > 0.0))
    throw Error(ErrorCode::domain, "nominal voltage must be positive");
  const double swing = ratio * nominal_voltage * std::sqrt(2.0);
  if (!(offset - swing > 0.0 && offset + swing < vref))
    throw Error(ErrorCode::domain,
                "nominal peak maps outside the ADC input range (0, vref)");
}

AdcReading::AdcReading(int count) : count_(count) {
  if (count < 0 || count > kAdcMax)
    throw Error(ErrorCode::domain,
                "ADC count out of range 0..1023: " + std::to_string(count));
}

SampleWindow::SampleWindow(std::vector<double> voltages, int cycles,
                           std::size_t start_index)
    : voltages_(std::move(voltages)), cycles_(cycles), start_index_(start_index) {
  if (cycles_ < 1) throw Error(ErrorCode::domain, "window needs at least one cycle");
  if (voltages_.size() != static_cast<std::size_t>(cycles_) * kSamplesPerCycle)
    throw Error(ErrorCode::domain, "window length is not cycles * 60");
}

double divider_ratio(double r_top_ohms, double r_bottom_ohms) {
  if (!(r_top_ohms > 0.0) || !(r_bottom_ohms > 0.0))
    throw Error(ErrorCode::domain, "resistances must be positive");
  return r_bottom_ohms / (r_top_ohms + r_bottom_ohms);
}

double adc_to_voltage(AdcReading reading, const ConversionConfig& cfg) {
  return (reading.count() * (cfg.vref / kAdcMax) - cfg.offset) / cfg.ratio;
}

AdcReading voltage_to_adc(double volts, const ConversionConfig& cfg) {
  if (std::isnan(volts)) throw Error(ErrorCode::domain, "voltage is NaN");
  const double counts = (volts * cfg.ratio + cfg.offset) * kAdcMax / cfg.vref;
  // std::round is half-away-from-zero.
  const double clamped = std::clamp(std::round(counts), 0.0, double{kAdcMax});
  return AdcReading(static_cast<int>(clamped));
}

std::vector<double> to_voltages(const std::vector<AdcReading>& readings,
                                const ConversionConfig& cfg) {
  std::vector<double> out;
  out.reserve(readings.size());
  for (auto r : readings) out.push_back(adc_to_voltage(r, cfg));
  return out;
}

}  // namespace pq
