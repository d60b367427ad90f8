#pragma once

#include <stdexcept>
#include <string>

namespace rtmtest {

enum class ErrorCode {
  invalid_argument,
  not_found,
  duplicate_id,
  dangling_endpoint,
  parse_error,
  inconsistent_diff,
  unknown_constraint,
  order_violation,
  unsplittable_input,
  setup_error,
  not_replayable,
  unknown_predicate,
  malformed_automaton,
  io_error,
};

const char* to_string(ErrorCode code);

/// All recoverable failures in this library are reported as Error with a
/// stable code; message text is for humans and may change.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rtmtest
