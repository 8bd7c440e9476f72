#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace avgtrack {

enum class ErrorKind {
  kInvalidArgument,
  kNotConnected,
  kNotSymmetric,
  kSingularSystem,
  kNotStabilizable,
  kNoConvergence,
  kNonFinite,
  kRhoExceedsGamma,
  kConfigInvalid,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. `kind` is what callers dispatch on;
/// `time` is set for failures tied to a simulation instant (NonFinite).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<double> time = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<double> time() const noexcept { return time_; }

 private:
  ErrorKind kind_;
  std::optional<double> time_;
};

}  // namespace avgtrack
