#include "scalefb/errors.hpp"

namespace scalefb {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::degenerate_environment: return "degenerate_environment";
    case ErrorCode::degenerate_measure: return "degenerate_measure";
    case ErrorCode::degenerate_posterior: return "degenerate_posterior";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace scalefb
