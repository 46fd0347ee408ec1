#include "pq/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pq/error.hpp"

namespace pq::dsp {

int HarmonicTable::spike_count() const {
  return static_cast<int>(std::count_if(entries.begin(), entries.end(),
                                        [](const HarmonicEntry& e) { return e.is_spike; }));
}

SampleWindow trim_to_whole_cycles(std::span<const double> samples, std::size_t start_index) {
  const std::size_t cycles = samples.size() / kSamplesPerCycle;
  if (cycles == 0)
    throw Error(ErrorCode::insufficient_data,
                "need at least 60 samples for one cycle, have " + std::to_string(samples.size()));
  const std::size_t keep = cycles * kSamplesPerCycle;
  const std::size_t skip = samples.size() - keep;
  return SampleWindow({samples.begin() + static_cast<std::ptrdiff_t>(skip), samples.end()},
                      static_cast<int>(cycles), start_index + skip);
}

double rms(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::insufficient_data, "RMS of empty sequence");
  double total = 0.0;
  for (double v : values) total += v * v;
  return std::sqrt(total / static_cast<double>(values.size()));
}

double rms(const SampleWindow& window) { return rms(window.voltages()); }

double peak(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::insufficient_data, "peak of empty sequence");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return std::max(*hi, std::abs(*lo));
}

double peak(const SampleWindow& window) { return peak(window.voltages()); }

Spectrum dft_magnitudes(const SampleWindow& window) {
  const auto bins = dft(window.voltages());
  Spectrum s;
  s.cycles = window.cycles();
  s.magnitudes.reserve(bins.size());
  for (const auto& b : bins) s.magnitudes.push_back(std::abs(b));
  return s;
}

double roundoff_floor(const Spectrum& spectrum) {
  double energy = 0.0;
  for (double m : spectrum.magnitudes) energy += m * m;
  return kRoundoffFloor * std::sqrt(energy);
}

HarmonicTable harmonic_table(const Spectrum& spectrum) {
  if (spectrum.cycles < 2)
    throw Error(ErrorCode::insufficient_data,
                "harmonic analysis needs at least 2 cycles, have " +
                    std::to_string(spectrum.cycles));
  const auto& mag = spectrum.magnitudes;
  const double floor = roundoff_floor(spectrum);
  auto level = [&](std::size_t k) { return mag.at(k) > floor ? mag[k] : 0.0; };
  HarmonicTable table;
  table.fundamental = mag.at(spectrum.harmonic_bin(1));
  for (int order = 2; order <= kMaxHarmonic; ++order) {
    const std::size_t k = spectrum.harmonic_bin(order);
    auto& e = table.entries[static_cast<std::size_t>(order - 2)];
    e.order = order;
    e.magnitude = mag.at(k);
    e.is_spike = level(k) > level(k - 1) && level(k) > level(k + 1);
  }
  return table;
}

namespace {

double harmonic_ratio(const HarmonicTable& table, bool spikes_only) {
  if (!(table.fundamental > 0.0))
    throw Error(ErrorCode::degenerate_signal, "fundamental magnitude is zero");
  double sum = 0.0;
  for (const auto& e : table.entries)
    if (!spikes_only || e.is_spike) sum += e.magnitude * e.magnitude;
  return std::sqrt(sum) / table.fundamental;
}

}  // namespace

double thd(const HarmonicTable& table) { return harmonic_ratio(table, true); }

double thd_unfiltered(const HarmonicTable& table) { return harmonic_ratio(table, false); }

std::vector<DisplayBin> display_spectrum(const Spectrum& spectrum) {
  const std::size_t n = spectrum.length();
  const double bin_hz = spectrum.bin_hz();
  std::vector<DisplayBin> out;
  out.reserve(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const bool edge = k == 0 || 2 * k == n;
    const double scale = (edge ? 1.0 : 2.0) / static_cast<double>(n);
    out.push_back({static_cast<double>(k) * bin_hz, spectrum.magnitudes[k] * scale});
  }
  return out;
}

WindowStats analyze_window(const SampleWindow& window) {
  WindowStats stats;
  stats.vrms = rms(window);
  stats.vpeak = peak(window);
  if (window.cycles() >= 2) {
    auto table = harmonic_table(dft_magnitudes(window));
    if (table.fundamental > 0.0) stats.thd = thd(table);
    stats.harmonics = table;
  }
  return stats;
}

}  // namespace pq::dsp
