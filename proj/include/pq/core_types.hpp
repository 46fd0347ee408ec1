#ifndef PQ_CORE_TYPES_HPP
#define PQ_CORE_TYPES_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pq {

inline constexpr int kSamplesPerCycle = 60;
inline constexpr int kSamplesPerHalfCycle = kSamplesPerCycle / 2;
inline constexpr double kNominalFrequency = 60.0;
inline constexpr double kSampleRate = kNominalFrequency * kSamplesPerCycle;
inline constexpr int kAdcMax = 1023;

/// Calibration of the analog front end: the divider scales mains down by
/// `ratio`, a DC source lifts it by `offset`, and the ADC maps [0, vref] onto
/// 0..1023.
struct ConversionConfig {
  double vref = 5.0;
  double offset = 3.3;
  double ratio = 0.005;
  double nominal_voltage = 120.0;

  /// Throws Error(domain) when the constants cannot describe a working front
  /// end (including a nominal peak that would leave the ADC input range).
  void validate() const;

  /// Volts represented by one ADC count.
  double quantization_step() const { return vref / kAdcMax / ratio; }
};

class AdcReading {
 public:
  constexpr AdcReading() = default;
  /// Throws Error(domain) outside 0..1023.
  explicit AdcReading(int count);

  constexpr int count() const { return count_; }

  friend constexpr bool operator==(AdcReading, AdcReading) = default;

 private:
  int count_ = 0;
};

/// Whole-cycle run of instantaneous voltages.
class SampleWindow {
 public:
  /// Throws Error(domain) unless voltages.size() == cycles * 60 and cycles >= 1.
  SampleWindow(std::vector<double> voltages, int cycles, std::size_t start_index = 0);

  const std::vector<double>& voltages() const { return voltages_; }
  int cycles() const { return cycles_; }
  std::size_t start_index() const { return start_index_; }
  std::size_t size() const { return voltages_.size(); }

 private:
  std::vector<double> voltages_;
  int cycles_;
  std::size_t start_index_;
};

/// Output fraction of a two-resistor divider measured across `r_bottom`.
double divider_ratio(double r_top_ohms, double r_bottom_ohms);

double adc_to_voltage(AdcReading reading, const ConversionConfig& cfg);

/// Inverse of adc_to_voltage, rounded half away from zero and clamped to the
/// ADC rails.
AdcReading voltage_to_adc(double volts, const ConversionConfig& cfg);

std::vector<double> to_voltages(const std::vector<AdcReading>& readings,
                                const ConversionConfig& cfg);

}  // namespace pq

#endif
