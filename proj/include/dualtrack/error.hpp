#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dualtrack {

enum class ErrorCode {
  malformed_step,
  malformed_evaluation,
  score_out_of_range,
  no_number_found,
  missing_marker,
  precondition,
  script_exhausted,
  backend_error,
  timeout,
  unknown_rating,
  invalid_counts,
  invalid_config,
  data_error,
  io_error,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a code so callers can branch
// without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// HTTP-level failure. status is 0 when no response was received.
class BackendError : public Error {
 public:
  BackendError(int status, std::string body_excerpt, const std::string& message)
      : Error(ErrorCode::backend_error, message),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}

  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

}  // namespace dualtrack
