#include <fftw3.h>

#include <complex>
#include <mutex>
#include <span>
#include <vector>

#include "pq/dsp.hpp"

namespace pq::dsp {

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::vector<std::complex<double>> dft(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::complex<double>> out(n);
  if (n == 0) return out;
  if (n == 1) {
    out[0] = values[0];
    return out;
  }

  std::vector<double> in(values.begin(), values.end());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  // r2c fills k = 0..n/2; the rest is the conjugate mirror.
  for (std::size_t k = n / 2 + 1; k < n; ++k) out[k] = std::conj(out[n - k]);
  return out;
}

}  // namespace pq::dsp
