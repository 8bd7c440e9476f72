#include "avgtrack/error.hpp"

#include <fmt/format.h>

namespace avgtrack {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kNotConnected: return "NotConnected";
    case ErrorKind::kNotSymmetric: return "NotSymmetric";
    case ErrorKind::kSingularSystem: return "SingularSystem";
    case ErrorKind::kNotStabilizable: return "NotStabilizable";
    case ErrorKind::kNoConvergence: return "NoConvergence";
    case ErrorKind::kNonFinite: return "NonFinite";
    case ErrorKind::kRhoExceedsGamma: return "RhoExceedsGamma";
    case ErrorKind::kConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message,
             std::optional<double> time)
    : std::runtime_error(fmt::format("{}: {}", to_string(kind), message)),
      kind_(kind),
      time_(time) {}

}  // namespace avgtrack
