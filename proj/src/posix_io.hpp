// Thin RAII wrappers over POSIX descriptors shared by the acquisition session
// and the simulator emitter. Private to the library.
#ifndef PQ_SRC_POSIX_IO_HPP
#define PQ_SRC_POSIX_IO_HPP

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

namespace pq::detail {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void reset();

 private:
  int fd_ = -1;
};

/// Self-pipe used to wake a poll() loop from another thread.
class WakePipe {
 public:
  WakePipe();
  void notify();
  void drain();
  int read_fd() const { return read_.get(); }

 private:
  Fd read_;
  Fd write_;
};

/// Throws Error(connection) on failure.
Fd connect_tcp(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout);
/// Throws Error(connection) on failure. Port 0 binds an ephemeral port.
Fd listen_tcp(const std::string& host, std::uint16_t port);
std::uint16_t local_port(int fd);
/// Opens and configures a serial device for raw 8N1 at `baud`.
Fd open_serial(const std::string& device, int baud);

/// Writes everything or returns false (peer gone).
bool send_all(int fd, std::string_view data);

std::string errno_message(const std::string& what);

}  // namespace pq::detail

#endif
