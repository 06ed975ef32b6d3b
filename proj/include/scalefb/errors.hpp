#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scalefb {

enum class ErrorCode {
  invalid_input,
  degenerate_environment,  // every trajectory has the same reward (gap of zero)
  degenerate_measure,      // relative reward with a zero denominator
  degenerate_posterior,    // posterior mean weight is the zero vector
  not_found,
  conflict,
  io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace scalefb
