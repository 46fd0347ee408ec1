#ifndef PQ_DSP_HPP
#define PQ_DSP_HPP

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pq/core_types.hpp"

namespace pq::dsp {

inline constexpr int kMaxHarmonic = 25;
inline constexpr int kHarmonicCount = kMaxHarmonic - 1;  // orders 2..25

/// Raw (unnormalized) DFT magnitudes of a whole-cycle window.
struct Spectrum {
  std::vector<double> magnitudes;
  int cycles = 0;

  std::size_t length() const { return magnitudes.size(); }
  double bin_hz() const { return kNominalFrequency / cycles; }
  /// Bin holding harmonic `order` of the nominal frequency.
  std::size_t harmonic_bin(int order) const {
    return static_cast<std::size_t>(order) * static_cast<std::size_t>(cycles);
  }
};

struct HarmonicEntry {
  int order = 0;
  double magnitude = 0.0;
  bool is_spike = false;
};

struct HarmonicTable {
  double fundamental = 0.0;
  std::array<HarmonicEntry, kHarmonicCount> entries{};

  int spike_count() const;
};

struct DisplayBin {
  double hz;
  double magnitude;
};

struct WindowStats {
  double vrms = 0.0;
  double vpeak = 0.0;
  /// Absent for single-cycle windows, where harmonic bins have no
  /// neighbours distinct from adjacent harmonics.
  std::optional<double> thd;
  std::optional<HarmonicTable> harmonics;
};

/// Keeps the most recent floor(n/60)*60 samples. `start_index` is the session
/// offset of samples[0]; the result records the offset of its own first sample.
SampleWindow trim_to_whole_cycles(std::span<const double> samples,
                                  std::size_t start_index = 0);

double rms(std::span<const double> values);
double rms(const SampleWindow& window);
double peak(std::span<const double> values);
double peak(const SampleWindow& window);

/// Full complex DFT, X[k] = sum_m x[m] exp(-2 pi i k m / L), for any L >= 1.
std::vector<std::complex<double>> dft(std::span<const double> values);

Spectrum dft_magnitudes(const SampleWindow& window);

/// Bins at or below kRoundoffFloor times the spectrum's L2 norm are treated
/// as zero by the spike rule. An exactly periodic window leaves FFT rounding
/// residue (~1e-12 relative) only on harmonic bins, which would otherwise
/// read as spikes over exact-zero neighbours.
inline constexpr double kRoundoffFloor = 1e-9;
double roundoff_floor(const Spectrum& spectrum);

/// Spike rule: a harmonic counts only when its bin strictly exceeds both
/// neighbouring bins. Requires cycles >= 2.
HarmonicTable harmonic_table(const Spectrum& spectrum);

/// sqrt(sum of spike magnitudes^2) / fundamental.
double thd(const HarmonicTable& table);
/// Same ratio over all 24 harmonic magnitudes, spikes or not.
double thd_unfiltered(const HarmonicTable& table);

/// Positive-frequency half (k = 0..L/2) scaled so a sine of amplitude A reads
/// A volts; DC and Nyquist bins use 1/L so a constant reads its own value.
std::vector<DisplayBin> display_spectrum(const Spectrum& spectrum);

WindowStats analyze_window(const SampleWindow& window);

}  // namespace pq::dsp

#endif
