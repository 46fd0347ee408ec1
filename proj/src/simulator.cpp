#include "pq/simulator.hpp"

#include <poll.h>
#include <sys/socket.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <set>

#include "posix_io.hpp"
#include "pq/error.hpp"

namespace pq::sim {

void WaveformSpec::validate() const {
  if (!(fundamental_rms >= 0.0))
    throw Error(ErrorCode::domain, "fundamental RMS must be non-negative");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::domain, "noise sigma must be non-negative");
  std::set<int> orders;
  for (const auto& h : harmonics) {
    if (h.order < 2 || h.order > 25)
      throw Error(ErrorCode::domain, "harmonic order must be in 2..25");
    if (!(h.relative_amplitude >= 0.0))
      throw Error(ErrorCode::domain, "harmonic amplitude must be non-negative");
    if (!orders.insert(h.order).second)
      throw Error(ErrorCode::domain, "duplicate harmonic order " + std::to_string(h.order));
  }
}

void DisturbanceSpec::validate() const {
  if (duration_half_cycles < 1)
    throw Error(ErrorCode::domain, "disturbance duration must be at least one half-cycle");
  if (!(magnitude_pu >= 0.0)) throw Error(ErrorCode::domain, "magnitude must be non-negative");
  const bool consistent = (kind == EventKind::sag && magnitude_pu < 1.0) ||
                          (kind == EventKind::surge && magnitude_pu > 1.0) ||
                          (kind == EventKind::interruption && magnitude_pu < 0.1);
  if (!consistent)
    throw Error(ErrorCode::domain, std::string(to_string(kind)) + " magnitude " +
                                       std::to_string(magnitude_pu) + " pu is inconsistent");
}

std::vector<double> synthesize(const WaveformSpec& spec,
                               const std::vector<DisturbanceSpec>& disturbances, int n_cycles) {
  if (n_cycles < 1) throw Error(ErrorCode::domain, "need at least one cycle");
  spec.validate();
  const std::size_t n = static_cast<std::size_t>(n_cycles) * kSamplesPerCycle;
  const std::size_t half_cycles = n / kSamplesPerHalfCycle;

  std::vector<double> scale(half_cycles, 1.0);
  std::vector<bool> claimed(half_cycles, false);
  for (const auto& d : disturbances) {
    d.validate();
    if (d.start_half_cycle + d.duration_half_cycles > half_cycles)
      throw Error(ErrorCode::domain, "disturbance extends beyond the generated " +
                                         std::to_string(half_cycles) + " half-cycles");
    for (std::size_t i = d.start_half_cycle; i < d.start_half_cycle + d.duration_half_cycles; ++i) {
      if (claimed[i]) throw Error(ErrorCode::domain, "disturbances overlap");
      claimed[i] = true;
      scale[i] = d.magnitude_pu;
    }
  }

  const double amplitude = spec.fundamental_rms * std::numbers::sqrt2;
  std::optional<std::normal_distribution<double>> noise;
  std::mt19937_64 rng(spec.noise_seed);
  if (spec.noise_sigma > 0.0) noise.emplace(0.0, spec.noise_sigma);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Phase within the cycle reduced to [0, 60) so long runs stay exactly periodic.
    const double cycle_pos = static_cast<double>(i % kSamplesPerCycle) / kSamplesPerCycle;
    double v = amplitude * std::sin(2.0 * std::numbers::pi * cycle_pos + spec.fundamental_phase);
    for (const auto& h : spec.harmonics)
      v += h.relative_amplitude * amplitude *
           std::sin(2.0 * std::numbers::pi * h.order * cycle_pos + h.phase);
    v *= scale[i / kSamplesPerHalfCycle];
    if (noise) v += (*noise)(rng);
    out[i] = v;
  }
  return out;
}

std::vector<AdcReading> quantize(const std::vector<double>& voltages, const ConversionConfig& cfg) {
  std::vector<AdcReading> out;
  out.reserve(voltages.size());
  for (double v : voltages) out.push_back(voltage_to_adc(v, cfg));
  return out;
}

struct Emitter::Impl {
  detail::Fd listener;
  detail::WakePipe wake;
  std::mutex mutex;
  std::vector<AdcReading> source;
  std::optional<std::vector<AdcReading>> pending;
  int client = -1;  // guarded by mutex
};

Emitter::Emitter(std::vector<AdcReading> source, const Endpoint& listen, EmitterOptions options)
    : impl_(std::make_unique<Impl>()), options_(options) {
  if (listen.kind != Endpoint::Kind::tcp)
    throw Error(ErrorCode::invalid_argument, "simulator listens on tcp:<host>:<port> only");
  if (source.empty()) throw Error(ErrorCode::invalid_argument, "simulator source is empty");
  if (!(options_.rate_hz > 0.0)) throw Error(ErrorCode::invalid_argument, "rate must be positive");
  impl_->source = std::move(source);
  impl_->listener = detail::listen_tcp(listen.host, listen.port);
  port_ = detail::local_port(impl_->listener.get());
  worker_ = std::thread([this] { run(); });
}

Emitter::~Emitter() {
  stop();
  if (worker_.joinable()) worker_.join();
}

void Emitter::replace_source(std::vector<AdcReading> source) {
  if (source.empty()) throw Error(ErrorCode::invalid_argument, "simulator source is empty");
  std::lock_guard lock(impl_->mutex);
  impl_->pending = std::move(source);
}

void Emitter::stop() {
  if (stopping_.exchange(true)) return;
  impl_->wake.notify();
  std::lock_guard lock(impl_->mutex);
  if (impl_->client >= 0) ::shutdown(impl_->client, SHUT_RDWR);
}

void Emitter::run() {
  using clock = std::chrono::steady_clock;
  while (!stopping_) {
    pollfd fds[2] = {{impl_->listener.get(), POLLIN, 0}, {impl_->wake.read_fd(), POLLIN, 0}};
    if (::poll(fds, 2, -1) < 0) continue;
    if (stopping_) break;
    if (!(fds[0].revents & POLLIN)) continue;

    detail::Fd client(::accept4(impl_->listener.get(), nullptr, nullptr, SOCK_CLOEXEC));
    if (!client.valid()) continue;
    {
      std::lock_guard lock(impl_->mutex);
      if (stopping_) break;
      impl_->client = client.get();
    }
    ++clients_served_;

    bool alive = true;
    if (options_.send_header) alive = detail::send_all(client.get(), encode_session_header(now_utc()));

    const auto t0 = clock::now();
    std::uint64_t sent = 0;
    std::size_t pos = 0;
    std::string batch;
    while (alive && !stopping_) {
      const double elapsed = std::chrono::duration<double>(clock::now() - t0).count();
      auto due = static_cast<std::uint64_t>(elapsed * options_.rate_hz);
      if (options_.max_readings > 0) due = std::min(due, options_.max_readings);

      batch.clear();
      std::uint64_t in_batch = 0;
      bool exhausted = false;
      while (sent + in_batch < due) {
        if (pos == impl_->source.size()) {
          std::lock_guard lock(impl_->mutex);
          if (impl_->pending) {
            impl_->source = std::move(*impl_->pending);
            impl_->pending.reset();
          }
          pos = 0;
          if (!options_.loop) {
            exhausted = true;
            break;
          }
        }
        batch += encode_reading(impl_->source[pos++]);
        ++in_batch;
      }
      if (!batch.empty()) {
        alive = detail::send_all(client.get(), batch);
        if (alive) {
          sent += in_batch;
          readings_sent_ += in_batch;
        }
      }
      if (exhausted || (options_.max_readings > 0 && sent >= options_.max_readings)) break;

      pollfd w{impl_->wake.read_fd(), POLLIN, 0};
      ::poll(&w, 1, 10);
    }
    {
      std::lock_guard lock(impl_->mutex);
      impl_->client = -1;
    }
    ::shutdown(client.get(), SHUT_WR);
  }
}

std::unique_ptr<Emitter> serve(const WaveformSpec& spec,
                               const std::vector<DisturbanceSpec>& disturbances, int loop_cycles,
                               const ConversionConfig& cfg, const std::string& listen_endpoint,
                               EmitterOptions options) {
  cfg.validate();
  auto readings = quantize(synthesize(spec, disturbances, loop_cycles), cfg);
  return std::make_unique<Emitter>(std::move(readings), parse_endpoint(listen_endpoint), options);
}

}  // namespace pq::sim
