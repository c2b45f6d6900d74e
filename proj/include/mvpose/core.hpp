#pragma once

#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mvpose {

enum class ErrorCode {
  NonPositiveDepth,
  InvalidRotation,
  InvalidArgument,
  InvalidOrder,
  DegenerateBox,
  Underdetermined,
  Diverged,
  EmptyState,
  EmptyResults,
  NotReady,
  ProjectionOutOfImage,
  ConfigParse,
  UnknownParameter,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable error code. All library failures are
/// reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

template <typename Scalar>
constexpr Scalar deg2rad(Scalar deg) {
  return deg * std::numbers::pi_v<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad2deg(Scalar rad) {
  return rad * Scalar(180) / std::numbers::pi_v<Scalar>;
}

}  // namespace mvpose
