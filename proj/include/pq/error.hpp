#ifndef PQ_ERROR_HPP
#define PQ_ERROR_HPP

#include <stdexcept>
#include <string>

namespace pq {

enum class ErrorCode {
  invalid_argument,
  domain,
  insufficient_data,
  degenerate_signal,
  io,
  connection,
  conflict,
  not_found,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// C API and the HTTP layer can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pq

#endif
