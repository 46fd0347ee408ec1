#ifndef PQ_SIMULATOR_HPP
#define PQ_SIMULATOR_HPP

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "pq/core_types.hpp"
#include "pq/events.hpp"
#include "pq/wire_protocol.hpp"

namespace pq::sim {

struct Harmonic {
  int order = 3;
  double relative_amplitude = 0.0;
  double phase = 0.0;  // radians
};

/// Mains-like test waveform: a 60 Hz fundamental plus integer harmonics and
/// optional additive Gaussian noise.
struct WaveformSpec {
  double fundamental_rms = 120.0;
  double fundamental_phase = 0.0;
  std::vector<Harmonic> harmonics;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 1;

  void validate() const;
};

/// Scales every sample of the half-cycles [start, start + duration) by
/// `magnitude_pu`.
struct DisturbanceSpec {
  EventKind kind = EventKind::surge;
  std::size_t start_half_cycle = 0;
  std::size_t duration_half_cycles = 1;
  double magnitude_pu = 1.0;

  void validate() const;
};

/// n_cycles * 60 samples at 3600 Hz. Disturbance windows must fit inside the
/// generated span and may not overlap.
std::vector<double> synthesize(const WaveformSpec& spec,
                               const std::vector<DisturbanceSpec>& disturbances, int n_cycles);

std::vector<AdcReading> quantize(const std::vector<double>& voltages, const ConversionConfig& cfg);

struct EmitterOptions {
  bool loop = true;
  /// Per-connection cap; 0 means unlimited. The connection is closed once
  /// the cap is reached.
  std::uint64_t max_readings = 0;
  double rate_hz = kSampleRate;
  bool send_header = true;
};

/// TCP server that plays a reading sequence to one client at a time, paced
/// in 10 ms batches at `rate_hz`.
class Emitter {
 public:
  /// Throws Error(connection) when the endpoint cannot be bound.
  Emitter(std::vector<AdcReading> source, const Endpoint& listen, EmitterOptions options = {});
  ~Emitter();

  Emitter(const Emitter&) = delete;
  Emitter& operator=(const Emitter&) = delete;

  std::uint16_t port() const { return port_; }
  /// Takes effect at the next loop boundary of the current source.
  void replace_source(std::vector<AdcReading> source);
  void stop();

  std::uint64_t readings_sent() const { return readings_sent_.load(); }
  std::uint64_t clients_served() const { return clients_served_.load(); }

 private:
  struct Impl;
  void run();

  std::unique_ptr<Impl> impl_;
  EmitterOptions options_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> readings_sent_{0};
  std::atomic<std::uint64_t> clients_served_{0};
  std::thread worker_;
};

/// Synthesizes `loop_cycles` cycles, quantizes them through `cfg` and serves
/// them on `listen_endpoint` ("tcp:<host>:<port>").
std::unique_ptr<Emitter> serve(const WaveformSpec& spec,
                               const std::vector<DisturbanceSpec>& disturbances, int loop_cycles,
                               const ConversionConfig& cfg, const std::string& listen_endpoint,
                               EmitterOptions options = {});

}  // namespace pq::sim

#endif
