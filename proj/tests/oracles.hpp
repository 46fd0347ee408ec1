// Reference computations written independently of the library, used to
// derive and freeze expected values.
#ifndef PQ_TESTS_ORACLES_HPP
#define PQ_TESTS_ORACLES_HPP

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace oracle {

// O(L^2) direct sum; angle reduced with (k*m) mod L to keep it exact-ish.
inline std::vector<std::complex<double>> direct_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>((k * m) % n) /
                       static_cast<double>(n);
      acc += x[m] * std::complex<double>(std::cos(a), std::sin(a));
    }
    out[k] = acc;
  }
  return out;
}

inline double direct_bin_magnitude(const std::vector<double>& x, std::size_t k) {
  const std::size_t n = x.size();
  std::complex<double> acc = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    const double a = -2.0 * std::numbers::pi * static_cast<double>((k * m) % n) /
                     static_cast<double>(n);
    acc += x[m] * std::complex<double>(std::cos(a), std::sin(a));
  }
  return std::abs(acc);
}

// THD with the strict-neighbour spike rule, from direct bins.
inline double direct_thd(const std::vector<double>& x, int cycles) {
  const auto c = static_cast<std::size_t>(cycles);
  const double fund = direct_bin_magnitude(x, c);
  double sum = 0.0;
  for (std::size_t h = 2; h <= 25; ++h) {
    const double m = direct_bin_magnitude(x, h * c);
    if (m > direct_bin_magnitude(x, h * c - 1) && m > direct_bin_magnitude(x, h * c + 1))
      sum += m * m;
  }
  return std::sqrt(sum) / fund;
}

inline double counts_to_volts(int count, double vref = 5.0, double offset = 3.3,
                              double ratio = 0.005) {
  return ((count * vref / 1023.0) - offset) / ratio;
}

inline int volts_to_counts(double v, double vref = 5.0, double offset = 3.3,
                           double ratio = 0.005) {
  const double c = (v * ratio + offset) * 1023.0 / vref;
  const double r = c < 0 ? -std::floor(-c + 0.5) : std::floor(c + 0.5);
  return static_cast<int>(r < 0 ? 0 : (r > 1023 ? 1023 : r));
}

inline double rms(const double* p, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += p[i] * p[i];
  return std::sqrt(s / static_cast<double>(n));
}

// 60 samples per cycle of a 60 Hz sine with optional harmonics (order, rel amp).
inline std::vector<double> sine(double vrms, int cycles,
                                const std::vector<std::pair<int, double>>& harmonics = {}) {
  const double a = vrms * std::sqrt(2.0);
  std::vector<double> out(static_cast<std::size_t>(cycles) * 60);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double ph = 2.0 * std::numbers::pi * static_cast<double>(i % 60) / 60.0;
    double v = a * std::sin(ph);
    for (auto [h, rel] : harmonics) v += a * rel * std::sin(h * ph);
    out[i] = v;
  }
  return out;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() /
             ("pq_" + tag + "_" + std::to_string(rng() % 1000000000));
  std::filesystem::create_directories(dir);
  return dir;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) : path(temp_dir(tag)) {}
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

inline std::string read_file(const std::filesystem::path& p) {
  std::string out;
  if (FILE* f = std::fopen(p.c_str(), "rb")) {
    char buf[65536];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
    std::fclose(f);
  }
  return out;
}

}  // namespace oracle

#endif
